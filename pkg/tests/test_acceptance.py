"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.

Criteria 1 and 3 pin per-mode caps (n_cap = 14 at beta = 1, and n_cap = 8 at
C = 0.7) whose discarded boundary weight sits orders of magnitude above the
asserted tolerances; no computation at those caps can land inside them.  Both
tests assert the stated numbers anyway and fail honestly, printing the
measured values; the truncation analysis is summarized in the README.  All
other criteria pass.
"""

import math
import time

import numpy as np

from bogolab import (
    LatticeModelSpec,
    SampledFunction,
    SampledSurface,
    Subspace,
    Variant,
    assemble_hamiltonian,
    build_basis,
    coherent_vector,
    derivative_identity_check,
    diagonalize,
    displaced_trace_pressure,
    embed_product,
    griffiths_check,
    maximize_over_C,
    pde_residual,
    pressure,
    substitute_hamiltonian,
    thermal_state,
)
from bogolab.bogoliubov import SubstitutedFamily
from bogolab.harness import (
    TIED,
    SweepConfig,
    equivalence_gap_trend,
    records_to_csv,
    run_sweep,
)


def criterion_line(num: int, name: str, ok: bool, detail: str = "") -> bool:
    print(f"CRITERION {num} [{name}]: {'PASS' if ok else 'FAIL'}"
          + (f"  {detail}" if detail else ""))
    return ok


INTERACTING = LatticeModelSpec(L=2, n_cap=6, t=1.0, phi=(0.5,), beta=1.0,
                               mu=-1.0, mu0=-1.0, nu=0.3)


def test_criterion_1_free_model_closed_form_suite():
    start = time.perf_counter()
    spec = LatticeModelSpec(L=1, n_cap=14, t=0.0, phi=(0.0,), beta=1.0,
                            mu=-1.0, mu0=-1.0, nu=0.5)
    _, _, _, obs = thermal_state(spec, Variant.H)
    maximum = maximize_over_C(spec, Variant.HPRIME)
    elapsed = time.perf_counter() - start
    targets = [
        ("p_V", obs.p_V, 0.7086751, 1e-6),
        ("a0_mean", obs.a0_mean.real, 0.5, 1e-6),
        ("N0_mean", obs.N0_mean, 0.8319777, 1e-6),
        ("C_max", maximum.C_max, 0.5, 1e-6),
        ("p0_sup", maximum.p0_sup, 0.25, 1e-8),
    ]
    failures = []
    for name, got, want, tol in targets:
        if not abs(got - want) <= tol:
            failures.append(f"{name} = {got:.10f}, asserted {want} +/- {tol:g} "
                            f"(off by {abs(got - want):.3e})")
    runtime_ok = elapsed < 1.0
    ok = not failures and runtime_ok
    criterion_line(
        1, "free-model closed forms", ok,
        f"runtime {elapsed:.2f}s; " + ("; ".join(failures) if failures
                                       else "all five quantities inside"))
    assert runtime_ok, f"runtime {elapsed:.2f}s exceeds 1 s"
    assert not failures, (
        "truncation floor at n_cap=14, beta=1 exceeds the stated tolerances: "
        + "; ".join(failures))


def test_criterion_2_inequality_chain_on_c_grid():
    start = time.perf_counter()
    spec = INTERACTING
    _, _, spectrum, _ = thermal_state(spec, Variant.H)
    p_v = pressure(spec, spectrum)
    family = SubstitutedFamily(spec, Variant.H)
    worst = math.inf
    for c in np.linspace(0.0, 0.7, 21):
        c = float(c)
        tail = coherent_vector(c, spec.n_cap, tol_trunc=1e-5).tail_mass
        p_tr = displaced_trace_pressure(spec, spectrum, c, tol_trunc=1e-5)
        p0 = family.pressure0(c)
        allowance = 1e-9 + 10.0 * tail
        worst = min(worst, (p_tr - p0) + allowance, (p_v - p_tr) + allowance)
    elapsed = time.perf_counter() - start
    ok = worst >= 0.0 and elapsed < 30.0
    criterion_line(2, "substituted <= displaced-trace <= full pressure", ok,
                   f"min widened slack {worst:.3e}, runtime {elapsed:.1f}s")
    assert elapsed < 30.0
    assert worst >= 0.0


def _matrix_element_gap(spec, C, pairs=50, seed=42, tol_trunc=1e-8):
    full = build_basis(spec, Subspace.FULL)
    reduced_dim = (spec.n_cap + 1) ** (spec.L - 1)
    H, _ = assemble_hamiltonian(spec, full, Variant.H)
    Hd = H.to_dense()
    subd = substitute_hamiltonian(spec, Variant.H, C).op.to_dense()
    cv = coherent_vector(C, spec.n_cap, tol_trunc=tol_trunc)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        p1 = rng.standard_normal(reduced_dim)
        p1 /= np.linalg.norm(p1)
        p2 = rng.standard_normal(reduced_dim)
        p2 /= np.linalg.norm(p2)
        lhs = embed_product(p1, cv, full) @ Hd @ embed_product(p2, cv, full)
        rhs = p1 @ subd @ p2
        worst = max(worst, abs(lhs - rhs))
    return worst


def test_criterion_3_matrix_element_identity():
    spec = INTERACTING.with_fields(n_cap=8)
    worst = _matrix_element_gap(spec, 0.7)
    worst_free = _matrix_element_gap(spec.with_fields(phi=(0.0,)), 0.7)
    worst_cap10 = _matrix_element_gap(spec.with_fields(n_cap=10), 0.7)
    ok = worst <= 1e-8
    criterion_line(
        3, "matrix-element identity at C = 0.7", ok,
        f"max gap {worst:.3e} (asserted <= 1e-8); diagnostics: free model "
        f"{worst_free:.3e}, n_cap=10 {worst_cap10:.3e}")
    assert worst_free <= 1e-8, "free-model identity should sit inside 1e-8"
    assert worst_cap10 <= 1e-8, "two extra cap levels should restore 1e-8"
    assert worst <= 1e-8, (
        f"truncation boundary weight at (n_cap=8, C=0.7) floors the identity "
        f"gap at {worst:.3e} for the interacting desk model")


def test_criterion_4_derivative_identities():
    points = [
        LatticeModelSpec(L=2, n_cap=5, t=1.0, phi=(0.5,), beta=1.0,
                         mu=-1.0, mu0=-0.8, nu=0.35),
        LatticeModelSpec(L=2, n_cap=6, t=0.7, phi=(0.5, 0.1), beta=1.5,
                         mu=-1.1, mu0=-0.9, nu=0.25),
        LatticeModelSpec(L=3, n_cap=3, t=1.0, phi=(0.6,), beta=1.0,
                         mu=-1.0, mu0=-1.05, nu=0.4),
    ]
    worst_resid, ratios = 0.0, []
    for spec in points:
        report = derivative_identity_check(spec, h_step=1e-3)
        worst_resid = max(worst_resid, report.resid_nu, report.resid_mu0)
        ratios.extend([report.ratio_nu, report.ratio_mu0])
    ratios_ok = all(3.5 <= r <= 4.5 for r in ratios)
    ok = worst_resid <= 1e-6 and ratios_ok
    criterion_line(4, "finite-volume derivative identities", ok,
                   f"max residual {worst_resid:.3e}, "
                   f"ratios {[f'{r:.2f}' for r in ratios]}")
    assert worst_resid <= 1e-6
    assert ratios_ok


def test_criterion_5_envelope_derivatives_and_pde():
    # closed-form surface: the nu-derivative of a quadratic is exact, so the
    # residual is the mu0 central-difference error, bounded by h^2 nu^2/mu0^4
    def closed_surface(n_mu0):
        mu0s = np.linspace(-2.0, -0.5, n_mu0)
        nus = np.linspace(0.1, 1.0, 19)
        return SampledSurface(mu0s, nus, -np.outer(1.0 / mu0s, nus ** 2), "cf")

    coarse = pde_residual(closed_surface(16))
    fine = pde_residual(closed_surface(31))
    h = 1.5 / 15
    bound = 1.5 * h * h * (1.0 / 0.5 ** 4)
    ratio = abs(coarse.residuals[8, 9]) / abs(fine.residuals[16, 9])
    closed_ok = coarse.max_abs_residual <= bound and 3.5 <= ratio <= 4.5

    # computed sup-pressure surface on the interacting desk model
    mu0s = np.linspace(-1.2, -0.8, 5)
    nus = np.linspace(0.2, 0.4, 5)
    values = np.zeros((5, 5))
    mask = np.zeros((5, 5), dtype=bool)
    for i, mu0 in enumerate(mu0s):
        for j, nu in enumerate(nus):
            m = maximize_over_C(
                INTERACTING.with_fields(mu0=float(mu0), nu=float(nu)),
                Variant.HPRIME)
            values[i, j] = m.p0_sup
            mask[i, j] = abs(m.C_max) > 1e-6 and not m.warnings
    report = pde_residual(SampledSurface(mu0s, nus, values, "p0_sup"),
                          mask=mask)
    h_grid = max(np.diff(mu0s).max(), np.diff(nus).max())
    sup_bound = max(1e-4, 10 * h_grid ** 2)
    sup_ok = report.max_abs_residual <= sup_bound
    ok = closed_ok and sup_ok
    criterion_line(
        5, "envelope derivatives and pressure PDE", ok,
        f"closed-form max {coarse.max_abs_residual:.3e} <= {bound:.3e}, "
        f"ratio {ratio:.2f}; computed surface max {report.max_abs_residual:.3e}"
        f" <= {sup_bound:.3e}")
    assert closed_ok
    assert sup_ok


def test_criterion_6_griffiths_lemma_checker():
    pos = np.concatenate([np.array([0.001, 0.01, 0.05]),
                          np.linspace(0.1, 1.0, 10)])
    xs = np.concatenate([-pos[::-1], [0.0], pos])
    family = [SampledFunction(xs, np.sqrt(xs ** 2 + 1.0 / n), f"n={n}")
              for n in (10, 100, 1000)]
    limit = SampledFunction(xs, np.abs(xs), "abs")
    report = griffiths_check(family, limit, 0.0)
    inside = -1.0 <= report.liminf_proxy <= report.limsup_proxy <= 1.0
    ok = report.passed and inside
    criterion_line(6, "convex-family derivative sandwich", ok,
                   f"proxies [{report.liminf_proxy:.4f}, "
                   f"{report.limsup_proxy:.4f}] within [-1, 1]")
    assert ok


def test_criterion_7_equivalence_gap_trend():
    start = time.perf_counter()
    free_config = SweepConfig(
        size_ladder=((1, 8), (2, 8), (3, 8), (4, 8)),
        betas=(4.0,), mus=(-1.0,), mu0s=(TIED,), nus=(0.2,),
        t=1.0, phi=(0.0,), tol_trunc=1e-8,
        audit_derivative_identities=False, audit_envelope=False,
        parallelism=1, dim_guard=20000)
    free_trend = equivalence_gap_trend(run_sweep(free_config), free_config)
    free_section = free_trend["sections"][0]

    interacting_config = SweepConfig(
        size_ladder=((2, 6), (3, 6), (4, 6)),
        betas=(1.0,), mus=(-1.0,), mu0s=(TIED,), nus=(0.3,),
        t=1.0, phi=(0.5,), tol_trunc=1e-6,
        audit_derivative_identities=False, audit_envelope=False,
        parallelism=1, dim_guard=20000)
    inter_trend = equivalence_gap_trend(run_sweep(interacting_config),
                                        interacting_config)
    inter_section = inter_trend["sections"][0]
    elapsed = time.perf_counter() - start

    free_ok = (free_section["closed_form_ok"]
               and free_section["verdict"] == "strictly_decreasing")
    inter_ok = inter_section["verdict"] in (
        "strictly_decreasing", "non_increasing",
        "decreasing_with_one_inversion")
    runtime_ok = elapsed < 600.0
    ok = free_ok and inter_ok and runtime_ok
    criterion_line(
        7, "equivalence-gap trend over the size ladder", ok,
        f"free max rel err {free_section['closed_form_max_rel_err']:.2e}, "
        f"free verdict {free_section['verdict']}, interacting verdict "
        f"{inter_section['verdict']}, runtime {elapsed:.0f}s")
    assert free_ok, free_section
    assert inter_ok, inter_section
    assert runtime_ok


def test_criterion_8_symmetry_suite():
    spec = INTERACTING
    # order parameter vanishes without the field
    _, _, _, obs0 = thermal_state(spec.with_fields(nu=0.0), Variant.H)
    a0_ok = abs(obs0.a0_mean) <= 1e-12

    # pressure even, spectra invariant under the field sign flip
    basis = build_basis(spec, Subspace.FULL)
    even_gap, spectra_gap = 0.0, 0.0
    for nu in (0.1, 0.2, 0.3):
        plus = spec.with_fields(nu=nu)
        minus = spec.with_fields(nu=-nu)
        h_plus, _ = assemble_hamiltonian(plus, basis, Variant.H)
        h_minus, _ = assemble_hamiltonian(minus, basis, Variant.H)
        s_plus = diagonalize(h_plus)
        s_minus = diagonalize(h_minus)
        even_gap = max(even_gap, abs(pressure(plus, s_plus)
                                     - pressure(minus, s_minus)))
        spectra_gap = max(spectra_gap, float(np.abs(
            s_plus.eigenvalues - s_minus.eigenvalues).max()))
    even_ok = even_gap <= 1e-10
    spectra_ok = spectra_gap <= 1e-10

    # occupation nondecreasing in the auxiliary potential
    n0s = []
    for mu0 in np.linspace(-1.3, -0.7, 7):
        _, _, _, obs = thermal_state(spec.with_fields(mu0=float(mu0)),
                                     Variant.HPRIME)
        n0s.append(obs.N0_mean)
    mono_slack = float(np.diff(n0s).min())
    mono_ok = mono_slack >= -1e-10

    ok = a0_ok and even_ok and spectra_ok and mono_ok
    criterion_line(
        8, "symmetry suite", ok,
        f"|<a0>|(nu=0) = {abs(obs0.a0_mean):.2e}, parity gap {even_gap:.2e}, "
        f"spectra gap {spectra_gap:.2e}, min mu0 slack {mono_slack:.2e}")
    assert ok


def test_criterion_9_byte_identical_determinism():
    base = dict(
        size_ladder=((2, 5),),
        betas=(1.0,), mus=(-1.0,), mu0s=(TIED, -0.8), nus=(0.2, 0.4),
        t=1.0, phi=(0.5,), tol_trunc=1e-6,
        audit_derivative_identities=True, audit_envelope=False,
        dim_guard=20000)
    outputs = []
    for width in (1, 1, 4, 4):
        config = SweepConfig(parallelism=width, **base)
        outputs.append(records_to_csv(run_sweep(config)).encode())
    ok = all(o == outputs[0] for o in outputs)
    criterion_line(9, "byte-identical sweeps at widths 1 and 4", ok,
                   f"{len(outputs)} runs, {len(outputs[0])} bytes each")
    assert ok
