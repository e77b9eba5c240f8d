import json

import numpy as np
import pytest

from fwsparse import (
    Dictionary,
    GeneratorSpec,
    SupportSet,
    build_identity_hadamard,
    build_random_unit,
    coherence,
    load_dictionary,
    load_instance,
    mat_vec,
    sample_instance,
    save_dictionary,
    save_instance,
)
from fwsparse.instances import DictionaryFileError, SparseInstance


class TestIdentityHadamard:
    def test_shape_and_unit_norms(self):
        D = build_identity_hadamard(8)
        assert (D.d, D.n) == (8, 16)
        assert np.allclose(np.linalg.norm(D.atoms, axis=0), 1.0, atol=1e-12)

    @pytest.mark.parametrize("d,mu", [(4, 0.5), (16, 0.25), (64, 0.125)])
    def test_coherence_exactly_inverse_sqrt_d(self, d, mu):
        D = build_identity_hadamard(d)
        assert abs(coherence(D) - 1.0 / np.sqrt(d)) <= 1e-12
        assert coherence(D) == pytest.approx(mu, abs=1e-12)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError, match="power of two"):
            build_identity_hadamard(12)


class TestRandomUnit:
    def test_deterministic_per_seed(self):
        a = build_random_unit(6, 10, seed=42)
        b = build_random_unit(6, 10, seed=42)
        assert np.array_equal(a.atoms, b.atoms)

    def test_different_seed_differs(self):
        a = build_random_unit(6, 10, seed=42)
        b = build_random_unit(6, 10, seed=43)
        assert not np.array_equal(a.atoms, b.atoms)

    def test_unit_columns(self):
        D = build_random_unit(9, 20, seed=0)
        assert np.allclose(np.linalg.norm(D.atoms, axis=0), 1.0, atol=1e-12)

    def test_coherence_below_one(self):
        D = build_random_unit(32, 64, seed=7)
        assert coherence(D) < 1.0


class TestSampleInstance:
    def test_zero_sparsity(self):
        D = build_identity_hadamard(4)
        inst = sample_instance(D, 0, seed=1)
        assert np.array_equal(inst.x_star, np.zeros(8))
        assert np.array_equal(inst.y, np.zeros(4))
        assert inst.m == 0 and len(inst.support) == 0

    def test_full_sparsity_identity(self):
        D = Dictionary(np.eye(5))
        inst = sample_instance(D, 5, seed=2)
        assert np.array_equal(inst.y, inst.x_star)

    def test_deterministic_per_seed(self):
        D = build_identity_hadamard(8)
        a = sample_instance(D, 3, seed=9)
        b = sample_instance(D, 3, seed=9)
        assert np.array_equal(a.x_star, b.x_star)
        assert a.support == b.support

    def test_magnitudes_within_bounds(self):
        D = build_identity_hadamard(16)
        for seed in range(10):
            inst = sample_instance(D, 4, coeff_min_abs=0.1, coeff_max_abs=1.0, seed=seed)
            mags = np.abs(inst.x_star[list(inst.support)])
            assert np.all(mags >= 0.1) and np.all(mags <= 1.0)

    def test_signal_is_dictionary_image(self):
        D = build_random_unit(6, 12, seed=3)
        inst = sample_instance(D, 4, seed=4)
        inst.verify_against(D)
        assert np.allclose(inst.y, mat_vec(D, inst.x_star), atol=1e-15)

    def test_oversized_sparsity_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            sample_instance(build_identity_hadamard(4), 9, seed=0)

    def test_instance_invariant_enforcement(self):
        with pytest.raises(ValueError, match="support"):
            SparseInstance(
                dictionary_ref="x",
                x_star=np.array([1.0, 0.0]),
                support=SupportSet((1,)),
                y=np.array([1.0, 0.0]),
                x_star_l1=1.0,
                m=1,
            )


class TestDictionaryFiles:
    def test_round_trip_identity(self, tmp_path):
        path = tmp_path / "id.txt"
        save_dictionary(Dictionary(np.eye(4)), path)
        D = load_dictionary(path)
        assert np.array_equal(D.atoms, np.eye(4))

    def test_round_trip_random_exact(self, tmp_path):
        path = tmp_path / "rand.txt"
        orig = build_random_unit(8, 16, seed=1)
        save_dictionary(orig, path)
        D = load_dictionary(path)
        assert np.max(np.abs(D.atoms - orig.atoms)) <= 1e-15

    def test_save_twice_identical_bytes(self, tmp_path):
        D = build_random_unit(5, 7, seed=2)
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        save_dictionary(D, p1)
        save_dictionary(D, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_zero_column_rejected(self, tmp_path):
        path = tmp_path / "zero.txt"
        path.write_text("2 2\n1 0\n0 0\n")
        with pytest.raises(DictionaryFileError, match="normalise"):
            load_dictionary(path)

    def test_header_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 2\n1 0\n0 1\n")
        with pytest.raises(DictionaryFileError, match="declares 3 rows"):
            load_dictionary(path)

    def test_row_width_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2\n1 0 0\n0 1\n")
        with pytest.raises(DictionaryFileError, match="expected 2 entries"):
            load_dictionary(path)

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2\n1 x\n0 1\n")
        with pytest.raises(DictionaryFileError, match="non-numeric"):
            load_dictionary(path)

    def test_small_drift_renormalised(self, tmp_path):
        # column norm off by ~1e-9: inside the repair band, outside the
        # verbatim band
        path = tmp_path / "drift.txt"
        v = 1.0 + 1e-9
        path.write_text(f"2 2\n{v:.17g} 0\n0 1\n")
        D = load_dictionary(path)
        assert np.linalg.norm(D.atoms[:, 0]) == pytest.approx(1.0, abs=1e-15)

    def test_gross_drift_rejected(self, tmp_path):
        path = tmp_path / "gross.txt"
        path.write_text("2 2\n1.001 0\n0 1\n")
        with pytest.raises(DictionaryFileError, match="non-unit norms"):
            load_dictionary(path)


class TestInstanceFiles:
    def test_round_trip(self, tmp_path):
        D = build_identity_hadamard(8)
        inst = sample_instance(D, 3, seed=11, dictionary_ref="identity_hadamard(d=8, n=16, seed=0)")
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        again = load_instance(path, D)
        assert np.array_equal(again.x_star, inst.x_star)
        assert again.support == inst.support
        assert np.allclose(again.y, inst.y, atol=1e-15)
        assert again.seed == inst.seed

    def test_serialisation_deterministic(self, tmp_path):
        D = build_identity_hadamard(8)
        inst = sample_instance(D, 3, seed=11)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_instance(inst, p1)
        save_instance(inst, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_dimension_mismatch_rejected(self, tmp_path):
        D = build_identity_hadamard(8)
        inst = sample_instance(D, 2, seed=1)
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        with pytest.raises(ValueError, match="instance is for"):
            load_instance(path, build_identity_hadamard(4))

    def test_malformed_json_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValueError, match="invalid JSON"):
            load_instance(path, build_identity_hadamard(4))

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"d": 4, "n": 8, "m": 1}))
        with pytest.raises(ValueError, match="missing field"):
            load_instance(path, build_identity_hadamard(4))


class TestGeneratorSpec:
    def test_identity_hadamard_constraints(self):
        with pytest.raises(ValueError, match="power of two"):
            GeneratorSpec(kind="identity_hadamard", d=12, n=24, m=2)
        with pytest.raises(ValueError, match="n = 2d"):
            GeneratorSpec(kind="identity_hadamard", d=8, n=8, m=2)

    def test_sparsity_bounded_by_dimension(self):
        with pytest.raises(ValueError, match="exceeds the ambient"):
            GeneratorSpec(kind="random_unit", d=4, n=16, m=5)

    def test_build_and_reference(self):
        spec = GeneratorSpec(kind="identity_hadamard", d=8, n=16, m=2, seed=5)
        D = spec.build_dictionary()
        assert (D.d, D.n) == (8, 16)
        assert "identity_hadamard" in spec.reference()

    def test_from_file_round_trip(self, tmp_path):
        path = tmp_path / "d.txt"
        save_dictionary(build_random_unit(4, 6, seed=1), path)
        spec = GeneratorSpec(kind="from_file", d=4, n=6, m=2, path=str(path))
        D = spec.build_dictionary()
        assert (D.d, D.n) == (4, 6)

    def test_json_round_trip(self):
        spec = GeneratorSpec(kind="random_unit", d=6, n=12, m=3, seed=9)
        assert GeneratorSpec.from_json_dict(spec.to_json_dict()) == spec
