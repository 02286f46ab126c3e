"""Model specification validation: parameter checks, digests, immutability."""

import numpy as np
import pytest

from levyvol import (
    CompoundPoissonGaussian,
    Deterministic,
    Exponential,
    GammaSubordinator,
    IndependentNIG,
    IntegratedCIR,
    ModelSpec,
    SpecError,
    jump_mass,
    mean_clock_increment,
)


def gaussian_spec(dim=2, clock=None):
    return ModelSpec(
        dim=dim,
        sigma=np.eye(dim),
        drift=None,
        jumps=None,
        clock=clock or Deterministic(1.0),
    )


class TestModelSpec:
    def test_accepts_identity(self):
        spec = gaussian_spec()
        assert spec.dim == 2
        np.testing.assert_array_equal(spec.sigma, np.eye(2))

    def test_drift_defaults_to_zero(self):
        spec = gaussian_spec(3)
        np.testing.assert_array_equal(spec.drift, np.zeros(3))

    def test_rejects_asymmetric_sigma(self):
        sigma = np.array([[1.0, 0.5], [0.4, 1.0]])
        with pytest.raises(SpecError, match="symmetric"):
            ModelSpec(dim=2, sigma=sigma, drift=None, jumps=None, clock=Deterministic(1.0))

    def test_clips_roundoff_negative_eigenvalue(self):
        # eigenvalues above -1e-10 are treated as zero, not rejected
        sigma = np.diag([1.0, -5e-11])
        spec = ModelSpec(dim=2, sigma=sigma, drift=None, jumps=None, clock=Deterministic(1.0))
        assert np.linalg.eigvalsh(spec.sigma).min() >= 0.0

    def test_rejects_indefinite_sigma(self):
        with pytest.raises(SpecError, match="PSD"):
            ModelSpec(dim=2, sigma=np.diag([1.0, -1.0]), drift=None, jumps=None,
                      clock=Deterministic(1.0))

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(SpecError):
            ModelSpec(dim=3, sigma=np.eye(2), drift=None, jumps=None, clock=Deterministic(1.0))
        with pytest.raises(SpecError):
            ModelSpec(dim=2, sigma=np.eye(2), drift=np.ones(3), jumps=None,
                      clock=Deterministic(1.0))

    def test_sigma_is_frozen(self):
        spec = gaussian_spec()
        with pytest.raises(ValueError):
            spec.sigma[0, 0] = 2.0
        with pytest.raises(ValueError):
            spec.drift[0] = 1.0

    def test_digest_is_stable_and_discriminating(self):
        a = gaussian_spec()
        b = gaussian_spec()
        assert a.digest() == b.digest()
        c = ModelSpec(dim=2, sigma=2.0 * np.eye(2), drift=None, jumps=None,
                      clock=Deterministic(1.0))
        assert a.digest() != c.digest()
        d = gaussian_spec(clock=Deterministic(2.0))
        assert a.digest() != d.digest()


class TestJumpSpecs:
    def test_nig_requires_beta_inside_alpha(self):
        with pytest.raises(SpecError):
            IndependentNIG(alpha=1.0, beta=1.5, delta=1.0, mu=0.0)
        with pytest.raises(SpecError):
            IndependentNIG(alpha=1.0, beta=-1.0, delta=1.0, mu=0.0)
        IndependentNIG(alpha=1.0, beta=-0.1, delta=1.0, mu=-0.1)  # paper's choice

    def test_nig_requires_positive_scale(self):
        with pytest.raises(SpecError):
            IndependentNIG(alpha=1.0, beta=0.0, delta=0.0, mu=0.0)

    def test_cpg_requires_positive_intensity(self):
        with pytest.raises(SpecError):
            CompoundPoissonGaussian(intensity=0.0)
        with pytest.raises(SpecError):
            CompoundPoissonGaussian(intensity=-1.0)

    def test_jump_mass(self):
        # total Levy mass: 0 for no jumps, d * intensity for compound Poisson,
        # infinite for NIG (infinite activity)
        assert jump_mass(None, 3) == 0.0
        assert jump_mass(CompoundPoissonGaussian(2.0), 3) == 6.0
        assert jump_mass(IndependentNIG(1.0, -0.1, 1.0, -0.1), 3) == np.inf


class TestClockSpecs:
    def test_positive_parameters_enforced(self):
        with pytest.raises(SpecError):
            Deterministic(0.0)
        with pytest.raises(SpecError):
            Exponential(-1.0)
        with pytest.raises(SpecError):
            GammaSubordinator(theta=0.0, eta=1.0)
        with pytest.raises(SpecError):
            GammaSubordinator(theta=1.0, eta=0.0)

    def test_cir_feller_condition(self):
        # 2*kappa*eta > xi^2 required for the square-root diffusion to stay positive
        with pytest.raises(SpecError, match="Feller"):
            IntegratedCIR(kappa=1.0, eta=1.0, xi=2.0)
        IntegratedCIR(kappa=1.0, eta=1.0, xi=1.0)

    def test_cir_default_substeps(self):
        clock = IntegratedCIR(kappa=1.0, eta=1.0, xi=0.5)
        assert clock.substeps == 64

    def test_mean_clock_increment(self):
        assert mean_clock_increment(Deterministic(0.5)) == 0.5
        assert mean_clock_increment(Exponential(2.0)) == 2.0
        assert mean_clock_increment(GammaSubordinator(3.0, 2.0)) == pytest.approx(1.5)
        # stationary CIR level is eta, so the unit-time integral has mean eta
        assert mean_clock_increment(IntegratedCIR(1.0, 0.7, 0.5)) == pytest.approx(0.7)
