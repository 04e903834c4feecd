"""Acceptance suite: desk-scale Monte Carlo reproduction of the reference values.

Three seeded experiments back the statistical criteria:

* ell = 100, oversampling 12, n = 200 for the curvature means and standard
  deviations (the higher resolution keeps the EPC discretization bias inside
  the 3-standard-error bands at u = +-3);
* ell = 100, oversampling 4 (the minimum the classifier accepts, and the
  closest legal match to the reference pixel budget of 48 ell^2) for the
  critical-point totals, with the t = 0 density bins taken at the default
  oversampling 6;
* ell = 300, oversampling 6, n = 200 for the cancellation ratios, the chaos
  structure and the cross-correlations.

Every criterion prints one [PASS]/[FAIL] line.  One clause is expected to
fail and is kept faithful rather than loosened: the u = 0 half-length
standard deviation at ell = 100 (see test_criterion3_zero_threshold_length_std).
"""

import math

import numpy as np
import pytest

from sphgeom import critical, grid as g, harness, lkc, synth, theory
from sphgeom.harness import ExperimentConfig

from oracle_topology import union_find_chi

MASTER_SEED = 2027
N_REAL = 200
_cache = {}


def _line(tag, ok, text):
    print(f"[{'PASS' if ok else 'FAIL'}] acceptance {tag}: {text}")
    return ok


def _rows(report, ell):
    return {(r["u"], r["stat"]): r for r in report.rows if r["ell"] == ell}


def _scalars(report, ell):
    return {r["stat"]: r for r in report.scalars if r["ell"] == ell}


@pytest.fixture(scope="session")
def exp100():
    if "exp100" not in _cache:
        _cache["exp100"] = harness.run_experiment(ExperimentConfig(
            multipoles=(100,), thresholds=(-3.0, -1.5, 0.0, 1.5, 3.0),
            n_realizations=N_REAL, master_seed=MASTER_SEED, oversampling=12,
            with_critical=False, corr_thresholds=(-1.5, 0.0, 1.5)))
    return _cache["exp100"]


@pytest.fixture(scope="session")
def exp300():
    if "exp300" not in _cache:
        _cache["exp300"] = harness.run_experiment(ExperimentConfig(
            multipoles=(300,), thresholds=(-1.5, 0.0, 1.5),
            n_realizations=N_REAL, master_seed=MASTER_SEED, oversampling=6,
            with_critical=False, corr_thresholds=(-1.5, 0.0, 1.5)))
    return _cache["exp300"]


def _zero_bin(fm, maxv, minv, eb=0.015):
    """(saddle, extrema) content of the Delta u = 0.03 bin centered on zero."""
    chi_lo, chi_hi = lkc.euler_characteristic_profile(fm, np.array([-eb, eb]))
    ext_lo = int((maxv >= -eb).sum() + (minv >= -eb).sum())
    ext_hi = int((maxv >= eb).sum() + (minv >= eb).sum())
    sad_bin = (ext_lo - chi_lo) - (ext_hi - chi_hi)
    return sad_bin, ext_lo - ext_hi


@pytest.fixture(scope="session")
def crit100():
    """Critical totals at ell = 100, oversampling 4 (the reference pixel budget)."""
    if "crit100" in _cache:
        return _cache["crit100"]
    ell = 100
    spec = g.default_grid(ell, oversampling=4)
    totals = {"next": [], "nsad": [], "ncrit": []}
    morse_ok = []
    chi_sphere_ok = []
    for r in range(N_REAL):
        seed = synth.mix64(MASTER_SEED, r)
        fm = synth.simulate(ell, seed, spec)
        maxv, minv = critical.find_extrema(fm)
        n_ext = maxv.size + minv.size
        totals["next"].append(n_ext)
        totals["nsad"].append(n_ext - 2)
        totals["ncrit"].append(2 * n_ext - 2)
        counts = critical.total_counts(fm)
        morse_ok.append(counts.maxima + counts.minima - counts.saddles == 2)
        chi_sphere_ok.append(lkc.euler_characteristic(fm, fm.values.min() - 1.0)[0] == 2)
    _cache["crit100"] = {k: np.array(v, dtype=float) for k, v in totals.items()}
    _cache["crit100"]["morse_ok"] = morse_ok
    _cache["crit100"]["chi_sphere_ok"] = chi_sphere_ok
    return _cache["crit100"]


@pytest.fixture(scope="session")
def crit100_density():
    """t = 0 density bins at ell = 100, default oversampling 6."""
    if "crit100_density" in _cache:
        return _cache["crit100_density"]
    ell = 100
    spec = g.default_grid(ell, oversampling=6)
    bins = {"sad": [], "ext": [], "crit": []}
    for r in range(N_REAL):
        seed = synth.mix64(MASTER_SEED, r)
        fm = synth.simulate(ell, seed, spec)
        maxv, minv = critical.find_extrema(fm)
        sad_bin, ext_bin = _zero_bin(fm, maxv, minv)
        bins["sad"].append(sad_bin)
        bins["ext"].append(ext_bin)
        bins["crit"].append(sad_bin + ext_bin)
    _cache["crit100_density"] = {k: np.array(v, dtype=float) for k, v in bins.items()}
    return _cache["crit100_density"]


class TestCriterion1Constants:
    def test_cq_constants(self):
        checks = [
            ("C3", theory.cq_constant(3, 200.0), 0.3676, 5e-4),
            ("C5(L=200)", theory.cq_constant(5, 200.0), 0.3290, 1e-3),
            ("C10", theory.cq_constant(10, 100.0), 0.1897, 1e-3),
            ("C25", theory.cq_constant(25, 100.0), 0.0776, 1e-3),
        ]
        for name, got, want, tol in checks:
            ok = abs(got - want) <= tol
            assert _line("1", ok, f"{name} = {got:.5f} vs {want} +- {tol}")

    def test_defect_sum(self):
        total, partials = theory.defect_constant(20)
        for name, got, want in [("term1", partials[0], 0.0613),
                                ("terms1-2", partials[1], 0.0860),
                                ("sum(k<=20)", total, 0.1182)]:
            ok = abs(got - want) <= 1e-3
            assert _line("1", ok, f"defect {name} = {got:.5f} vs {want} +- 1e-3")

    def test_j04_integrals(self):
        for L, want in ((500, 1.2420), (1000, 1.3475), (2000, 1.4528)):
            got = theory.j04_integral(float(L))
            ok = abs(got - want) <= 2e-3
            assert _line("1", ok, f"int J0^4 psi (L={L}) = {got:.5f} vs {want} +- 2e-3")

    def test_limit_constants(self):
        quad = theory.trispectrum_limit_constant("quadrature")
        semi = theory.trispectrum_limit_constant("semianalytic")
        ok1 = abs(quad - 0.297) <= 5e-3
        ok2 = abs(semi - 0.298) <= 2e-3
        ok3 = abs(quad - semi) <= 5e-3
        assert _line("1", ok1, f"limit constant (quadrature) = {quad:.5f} vs 0.297 +- 0.005")
        assert _line("1", ok2, f"limit constant (semi-analytic) = {semi:.5f} vs 0.298 +- 0.002")
        assert _line("1", ok3, f"methods agree: |{quad:.5f} - {semi:.5f}| <= 0.005")


class TestCriterion2Means:
    def test_epc_means(self, exp100):
        rows = _rows(exp100, 100)
        targets = {-3.0: -10.53, -1.5: -156.00, 1.5: 156.16, 3.0: 10.69}
        for u, want in targets.items():
            r = rows[(u, "epc")]
            se = r["sample_std"] / math.sqrt(N_REAL)
            ok = abs(r["sample_mean"] - want) <= 3 * se
            assert _line("2", ok,
                         f"EPC mean u={u:+.1f}: {r['sample_mean']:.2f} vs {want} "
                         f"(3 SE = {3 * se:.2f})")

    def test_half_length_mean_u0(self, exp100):
        r = _rows(exp100, 100)[(0.0, "length")]
        ok = abs(r["sample_mean"] / 17.766 - 1) <= 0.005
        assert _line("2", ok, f"half-length mean u=0: {r['sample_mean']:.4f} "
                              f"vs 17.766 +- 0.5%")

    def test_area_mean(self, exp100):
        r = _rows(exp100, 100)[(1.5, "area")]
        se = r["sample_std"] / math.sqrt(N_REAL)
        ok = abs(r["sample_mean"] - 0.0668) <= 3 * se
        assert _line("2", ok, f"area mean u=1.5: {r['sample_mean']:.5f} vs 0.0668 "
                              f"(3 SE = {3 * se:.5f})")


class TestCriterion3Stds:
    def test_generic_threshold_stds(self, exp100):
        rows = _rows(exp100, 100)
        for u in (-1.5, 1.5):
            checks = [("epc", 9.74, 0.20), ("length", 0.647, 0.20), ("area", 0.0097, 0.20)]
            for stat, want, tol in checks:
                r = rows[(u, stat)]
                ok = abs(r["sample_std"] / want - 1) <= tol
                assert _line("3", ok, f"{stat} std u={u:+.1f}: {r['sample_std']:.4f} "
                                      f"vs {want} +- {tol:.0%}")

    def test_area_std_u0(self, exp100):
        r = _rows(exp100, 100)[(0.0, "area")]
        ok = abs(r["sample_std"] / 0.0013 - 1) <= 0.25
        assert _line("3", ok, f"area std u=0: {r['sample_std']:.5f} vs 0.0013 +- 25%")

    def test_criterion3_zero_threshold_length_std(self, exp100):
        """Faithful but unattainable clause, kept red deliberately.

        The criterion asks for the u = 0 half-length standard deviation at
        ell = 100 to land within 30% of the leading-order 0.018.  The exact
        fourth-chaos prediction only moves that to 0.019, while the true
        variance carries same-order corrections from the higher even chaoses:
        the reference simulations themselves report 0.028 (+56%) at ell = 100
        and never get closer than +43% up to ell = 900.  A faithful estimator
        therefore cannot pass; see the decisions ledger.
        """
        r = _rows(exp100, 100)[(0.0, "length")]
        ok = abs(r["sample_std"] / 0.018 - 1) <= 0.30
        assert _line("3", ok, f"half-length std u=0: {r['sample_std']:.4f} vs "
                              f"0.018 +- 30% (known-unattainable clause)")


class TestCriterion4Critical:
    def test_total_counts(self, crit100):
        data = crit100
        for key, want in (("ncrit", 11662.9), ("next", 5831.4), ("nsad", 5831.4)):
            got = data[key].mean()
            ok = abs(got / want - 1) <= 0.003
            assert _line("4", ok, f"{key} mean = {got:.1f} vs {want} +- 0.3%")

    def test_morse_identity_every_realization(self, crit100):
        ok = all(crit100["morse_ok"]) and all(crit100["chi_sphere_ok"])
        assert _line("4", ok, f"Morse identity and chi(sphere) = 2 on all "
                              f"{len(crit100['morse_ok'])} realizations")

    def test_densities_at_zero(self, crit100_density):
        lam = 100 * 101
        width = 0.03
        sad = crit100_density["sad"].mean() / (lam / math.sqrt(3) * width)
        ext = crit100_density["ext"].mean() / (lam / math.sqrt(3) * width)
        cri = crit100_density["crit"].mean() / (2 * lam / math.sqrt(3) * width)
        ok1 = abs(sad / 0.6907 - 1) <= 0.05
        ok2 = ext <= 0.01
        ok3 = abs(cri / 0.3453 - 1) <= 0.05
        assert _line("4", ok1, f"saddle density(0) = {sad:.4f} vs 0.6907 +- 5%")
        assert _line("4", ok2, f"extrema density(0) = {ext:.4f} <= 0.01")
        assert _line("4", ok3, f"critical density(0) = {cri:.4f} vs 0.3453 +- 5%")


class TestCriterion5Berry:
    def test_length_cancellation(self, exp300):
        rows = _rows(exp300, 300)
        s0 = rows[(0.0, "length")]["sample_std"]
        s15 = rows[(1.5, "length")]["sample_std"]
        ok = s15 >= 5 * s0
        assert _line("5", ok, f"half-length std ratio u=1.5 / u=0 = "
                              f"{s15 / s0:.1f} >= 5")

    def test_epc_cancellation(self, exp300):
        rows = _rows(exp300, 300)
        s0 = rows[(0.0, "epc")]["sample_std"]
        s15 = rows[(1.5, "epc")]["sample_std"]
        ok = s15 >= 2 * s0
        assert _line("5", ok, f"EPC std ratio u=1.5 / u=0 = {s15 / s0:.1f} >= 2")


class TestCriterion6Chaos:
    def test_var_h2(self, exp100, exp300):
        for ell, report in ((100, exp100), (300, exp300)):
            r = _scalars(report, ell)["h2"]
            want = theory.var_h2(ell)
            got = r["sample_std"] ** 2
            ok = abs(got / want - 1) <= 0.10
            assert _line("6", ok, f"Var(h2) ell={ell}: {got:.3f} vs {want:.3f} +- 10%")

    def test_chaos_subtraction(self, exp300):
        r = _rows(exp300, 300)[(1.5, "area")]
        ratio = (r["chaos_subtracted_std"] / r["sample_std"]) ** 2
        ok = ratio < 0.10
        assert _line("6", ok, f"area u=1.5 ell=300: subtracted/raw variance = "
                              f"{ratio:.4f} < 0.10")


class TestCriterion7Correlations:
    def test_pairwise_chaos2_dominated(self, exp300):
        block = exp300.correlations["300"]
        idx = {lab: i for i, lab in enumerate(block["labels"])}
        m = np.array(block["matrix"])
        for a, b in (("A@-1.5", "L@-1.5"), ("A@-1.5", "EP@-1.5"), ("L@-1.5", "EP@-1.5")):
            c = m[idx[a], idx[b]]
            ok = abs(c) >= 0.9
            assert _line("7", ok, f"|corr({a}, {b})| = {abs(c):.3f} >= 0.9")

    def test_nodal_defect_uncorrelated(self, exp300):
        block = exp300.correlations["300"]
        idx = {lab: i for i, lab in enumerate(block["labels"])}
        m = np.array(block["matrix"])
        c = m[idx["L@0"], idx["defect"]]
        ok = abs(c) <= 0.2
        assert _line("7", ok, f"|corr(length@0, defect)| = {abs(c):.3f} <= 0.2")


class TestCriterion8Oracles:
    def test_epc_vs_betti_labeling(self):
        rng = np.random.default_rng(808)
        spec = g.build_grid(48, 96)
        agree = 0
        for _ in range(50):
            ell = int(rng.integers(2, 9))
            fm = synth.simulate(ell, int(rng.integers(1 << 30)), spec)
            u = float(rng.uniform(-2.2, 2.2))
            if lkc.euler_characteristic(fm, u)[0] == union_find_chi(fm, u):
                agree += 1
        ok = agree == 50
        assert _line("8", ok, f"EPC corner counting vs Betti labeling: {agree}/50 exact")

    def test_zonal_boundary_closed_form(self):
        spec = g.default_grid(2)
        a = np.zeros(3, dtype=complex)
        a[0] = 1.0
        fm = synth.synthesize(synth.HarmonicCoefficients(2, a), spec)
        got = lkc.boundary_length(fm, 0.0)
        want = math.sqrt(2.0 / 3.0) / 2.0
        ok = abs(got / want - 1) <= 0.01
        assert _line("8", ok, f"zonal l=2 half-length = {got:.5f} vs {want:.5f} +- 1%")

    def test_synthesis_vs_direct_sum(self):
        import scipy.special as sc
        ell = 50
        spec = g.default_grid(ell)
        alm = synth.sample_alm(ell, seed=7)
        fm = synth.synthesize(alm, spec)
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(25):
            i = int(rng.integers(0, spec.n_rings))
            j = int(rng.integers(0, spec.n_phi))
            tot = (alm.a[0] * sc.sph_harm_y(ell, 0, spec.theta[i], spec.phi[j])).real
            for m in range(1, ell + 1):
                tot += 2 * (alm.a[m] * sc.sph_harm_y(ell, m, spec.theta[i], spec.phi[j])).real
            worst = max(worst, abs(float(tot) - fm.values[i, j]))
        ok = worst <= 1e-10
        assert _line("8", ok, f"synthesize vs direct summation: max |diff| = {worst:.2e}")
