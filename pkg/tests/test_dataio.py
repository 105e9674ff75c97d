"""Image file round trips, manifests, and deterministic patch sampling."""
import numpy as np
import pytest

from krawtex.dataio import (
    load_image,
    load_manifest,
    sample_patches,
    save_image,
)
from krawtex.image import PlanarImage


def random_rgb(rng, h=12, w=10):
    return PlanarImage(channels=rng.random((3, h, w)), colorspace="rgb")


class TestImageIO:
    @pytest.mark.parametrize("suffix", [".png", ".ppm"])
    def test_save_load_roundtrip(self, tmp_path, suffix):
        rng = np.random.default_rng(0)
        image = random_rgb(rng)
        path = tmp_path / f"img{suffix}"
        save_image(image, path)
        back = load_image(path)
        assert back.shape == image.shape
        assert np.max(np.abs(back.channels - image.channels)) <= 0.5 / 255.0 + 1e-12

    def test_one_by_one_black_png(self, tmp_path):
        path = tmp_path / "dot.png"
        save_image(PlanarImage(channels=np.zeros((3, 1, 1)), colorspace="rgb"), path)
        back = load_image(path)
        assert back.shape == (1, 1)
        assert np.all(back.channels == 0.0)

    def test_ppm_and_png_load_identically(self, tmp_path):
        rng = np.random.default_rng(1)
        image = random_rgb(rng)
        save_image(image, tmp_path / "a.png")
        save_image(image, tmp_path / "a.ppm")
        png = load_image(tmp_path / "a.png")
        ppm = load_image(tmp_path / "a.ppm")
        np.testing.assert_array_equal(png.channels, ppm.channels)

    def test_grayscale_pgm(self, tmp_path):
        gray = PlanarImage(
            channels=np.linspace(0, 1, 24).reshape(1, 4, 6), colorspace="y"
        )
        save_image(gray, tmp_path / "g.pgm")
        back = load_image(tmp_path / "g.pgm")
        assert back.num_channels == 1
        assert np.max(np.abs(back.channels - gray.channels)) <= 0.5 / 255.0 + 1e-12

    def test_ppm_comments_parsed(self, tmp_path):
        body = bytes([10, 20, 30])
        (tmp_path / "c.pgm").write_bytes(b"P5\n# a comment\n3 1\n# another\n255\n" + body)
        img = load_image(tmp_path / "c.pgm")
        np.testing.assert_allclose(img.channels[0, 0], [10 / 255, 20 / 255, 30 / 255])

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")

    def test_unsupported_format(self, tmp_path):
        (tmp_path / "x.jpg").write_bytes(b"\xff\xd8")
        with pytest.raises(ValueError):
            load_image(tmp_path / "x.jpg")

    def test_corrupt_ppm(self, tmp_path):
        (tmp_path / "bad.ppm").write_bytes(b"P6\n4 4\n255\nxx")
        with pytest.raises(ValueError):
            load_image(tmp_path / "bad.ppm")

    def test_16bit_ppm_rejected(self, tmp_path):
        (tmp_path / "deep.ppm").write_bytes(b"P6\n1 1\n65535\n" + b"\0" * 6)
        with pytest.raises(ValueError):
            load_image(tmp_path / "deep.ppm")

    def test_quantization_rounds_half_up(self, tmp_path):
        # 0.5/255 rounds away from zero to 1/255
        image = PlanarImage(
            channels=np.full((3, 1, 1), 0.5 / 255.0), colorspace="rgb"
        )
        save_image(image, tmp_path / "q.ppm")
        back = load_image(tmp_path / "q.ppm")
        assert back.channels[0, 0, 0] == pytest.approx(1.0 / 255.0)


class TestManifest:
    def test_parse_pairs_and_comments(self, tmp_path):
        rng = np.random.default_rng(2)
        for name in ("h1.png", "c1.png", "h2.png", "c2.png"):
            save_image(random_rgb(rng), tmp_path / name)
        manifest = tmp_path / "pairs.txt"
        manifest.write_text("# training pairs\nh1.png\tc1.png\n\nh2.png\tc2.png\n")
        loaded = load_manifest(manifest, seed=7, patch_size=8)
        assert len(loaded.pairs) == 2
        assert loaded.seed == 7
        assert loaded.pairs[0][0].name == "h1.png"

    def test_missing_file_rejected(self, tmp_path):
        manifest = tmp_path / "pairs.txt"
        manifest.write_text("a.png\tb.png\n")
        with pytest.raises(FileNotFoundError):
            load_manifest(manifest)

    def test_malformed_line_rejected(self, tmp_path):
        manifest = tmp_path / "pairs.txt"
        manifest.write_text("only_one_column\n")
        with pytest.raises(ValueError):
            load_manifest(manifest)


class TestPatches:
    def test_same_seed_same_coordinates(self):
        rng = np.random.default_rng(3)
        hazy = random_rgb(rng, 40, 40)
        clear = random_rgb(rng, 40, 40)
        a = sample_patches(hazy, clear, size=16, count=5, seed=9)
        b = sample_patches(hazy, clear, size=16, count=5, seed=9)
        for (h1, c1), (h2, c2) in zip(a, b):
            np.testing.assert_array_equal(h1, h2)
            np.testing.assert_array_equal(c1, c2)

    def test_exact_size_single_position(self):
        rng = np.random.default_rng(4)
        hazy = random_rgb(rng, 16, 16)
        clear = random_rgb(rng, 16, 16)
        patches = sample_patches(hazy, clear, size=16, count=3, seed=0)
        for h, c in patches:
            np.testing.assert_array_equal(h, hazy.channels)
            np.testing.assert_array_equal(c, clear.channels)

    def test_patch_is_submatrix_and_aligned(self):
        rng = np.random.default_rng(5)
        hazy = random_rgb(rng, 30, 30)
        clear = random_rgb(rng, 30, 30)
        patches = sample_patches(hazy, clear, size=8, count=10, seed=1)
        for h, c in patches:
            # locate the hazy crop by scanning all possible corners
            found = False
            for top in range(23):
                for left in range(23):
                    if np.array_equal(
                        h, hazy.channels[:, top : top + 8, left : left + 8]
                    ):
                        np.testing.assert_array_equal(
                            c, clear.channels[:, top : top + 8, left : left + 8]
                        )
                        found = True
                        break
                if found:
                    break
            assert found

    def test_too_small_image(self):
        rng = np.random.default_rng(6)
        hazy = random_rgb(rng, 8, 8)
        clear = random_rgb(rng, 8, 8)
        with pytest.raises(ValueError):
            sample_patches(hazy, clear, size=16, count=1, seed=0)

    def test_mismatched_pair(self):
        rng = np.random.default_rng(7)
        with pytest.raises(ValueError):
            sample_patches(random_rgb(rng, 16, 16), random_rgb(rng, 17, 16),
                           size=8, count=1, seed=0)
