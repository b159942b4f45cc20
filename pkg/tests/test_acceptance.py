"""Acceptance criteria on the reference tunnelling setup.

Each test records one PASS/FAIL line, printed at the end of the pytest run.
"""

import time

import numpy as np
import pytest

from weaktime.config import reference_config
from weaktime.harness import compute_table, fig1_data, fig2_data, free_particle_errors, max_drift
from weaktime.model import reflection_amplitude, transmission_amplitude
from weaktime.sdapprox import SDConfig, sd_uncertainty_product
from weaktime.tptd import arrival_time_momentum
from weaktime.weakvals import log_density_momentum, spatial_average_check

from .conftest import ACCEPTANCE_LINES, Case, make_scenario


def _record(tag, label, value, target, passed):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {tag} {label}: {value} (target {target})")
    assert passed, f"{tag} {label}: {value} vs {target}"


def test_1_mean_weak_momentum(ref):
    _record("1a", "time-averaged weak momentum", f"{ref.summary.mean_p:.6f}", "0.2522 +- 0.0005",
            abs(ref.summary.mean_p - 0.2522) <= 0.0005)


def test_1_mean_weak_momentum_narrow():
    start = time.perf_counter()
    case = Case(make_scenario(gamma=0.00025))
    elapsed = time.perf_counter() - start
    _record("1b", "time-averaged weak momentum, gamma/4", f"{case.summary.mean_p:.6f}", "0.2505 +- 0.0005",
            abs(case.summary.mean_p - 0.2505) <= 0.0005)
    _record("1c", "runtime per config", f"{elapsed:.2f} s", "< 60 s", elapsed < 60)


def test_2_weak_momentum_stddev(ref, narrow):
    sd = (ref.scenario.params.hbar**2 * ref.scenario.state.gamma / 2) ** 0.5
    _record("2a", "weak momentum std dev", f"{ref.summary.std_p:.6f} (steepest descent {sd:.5f})",
            "0.02228 +- 5e-4", abs(ref.summary.std_p - 0.02228) <= 5e-4)
    _record("2b", "weak momentum std dev, gamma/4", f"{narrow.summary.std_p:.6f}", "0.01117 +- 5e-4",
            abs(narrow.summary.std_p - 0.01117) <= 5e-4)


def test_3_arrival_time_momentum(ref):
    p_bar = arrival_time_momentum(ref.scenario, ref.x)
    _record("3", "arrival-time momentum", f"{p_bar:.6f}", "0.2502 +- 0.001", abs(p_bar - 0.2502) <= 0.001)


def test_4_fig1_overlay():
    dist, t, exact, approx = fig1_data(reference_config())
    peak = exact.max()
    worst = float(np.max(np.abs(exact - approx)) / peak)
    t_exact, t_sd = t[np.argmax(exact)], t[np.argmax(approx)]
    ACCEPTANCE_LINES.append(
        f"[{'PASS' if t_exact < t_sd else 'FAIL'}] 4b exact peak earlier: {t_exact:.3f} vs {t_sd:.3f} (target strictly earlier)"
    )
    _record("4a", "fig1 max |exact - estimate| / peak", f"{worst:.4f}", "< 0.05", worst < 0.05)
    assert t_exact < t_sd


def test_5_fig2_overlay():
    dist, series, summary, cols = fig2_data(reference_config())
    region = dist.density > 0.01 * dist.density.max()
    p_i = 0.25
    re = float(np.max(np.abs(cols[region, 1] - cols[region, 2])) / p_i)
    im = float(np.max(np.abs(cols[region, 3] - cols[region, 4])) / p_i)
    _record("5", "fig2 max deviation / p_i (Re, Im)", f"{re:.4f}, {im:.4f}", "< 0.05 each", re < 0.05 and im < 0.05)


def test_6_commutator(ref):
    m = ref.summary
    expected = 1j * m.hbar * (1 - m.mean_t * m.density_at_zero)
    c = m.commutator
    ok = abs(c - 1j) < 0.01 and abs(c - expected) < 0.01
    _record("6", "commutator <t(H* - H)>", f"{c.real:.2e}{c.imag:+.6f}i (expected i*{expected.imag:.6f})",
            "|c - i| < 0.01", ok)


@pytest.mark.parametrize("name", ["ref", "narrow", "free"])
def test_7_uncertainty_bounds(name, request):
    m = request.getfixturevalue(name).summary
    ok = m.second_moment_bound_holds and m.stddev_bound_holds
    _record(f"7a[{name}]", "<t^2><HH*> >= hbar^2/4 and stddev bound",
            f"{m.product_second_moment:.4g} >= 0.25, {m.product_stddev:.4g} >= {m.bound_rhs:.4g}", "both hold", ok)


def test_7_variance_product(ref):
    m = ref.summary
    sd = sd_uncertainty_product(SDConfig(ref.scenario.state, ref.scenario.barrier, ref.scenario.params, ref.x))
    _record("7b", "variance product <dt^2><dH dH*>",
            f"{m.variance_product:.4f} (closed form {sd:.4f})", "0.251 +- 5%",
            abs(m.variance_product - 0.251) <= 0.05 * 0.251)


def test_8_unitarity(ref):
    s = ref.scenario
    p = ref.dist.momentum_grid.nodes
    err = float(np.max(np.abs(np.abs(transmission_amplitude(s.barrier, s.params, p)) ** 2
                              + np.abs(reflection_amplitude(s.barrier, s.params, p)) ** 2 - 1)))
    _record("8a", "unitarity max ||T|^2 + |R|^2 - 1|", f"{err:.2e}", "< 1e-12", err < 1e-12)


def test_8_free_particle_closed_form():
    err = free_particle_errors(reference_config())
    _record("8b", "free-particle spectral vs closed form", f"{err:.2e}", "< 1e-8 relative", err < 1e-8)


def test_8_log_density_identity(ref):
    region = ref.dist.density > 0.01 * ref.dist.density.max()
    im = ref.series.p_weak.imag
    fd = log_density_momentum(ref.scenario, ref.dist)
    err = float(np.max(np.abs(im - fd)[region]) / np.max(np.abs(im[region])))
    _record("8c", "Im p_w = -(hbar/2) d ln P/dx", f"{err:.2e}", "< 1e-4", err < 1e-4)


def test_8_spatial_average(free):
    errs = [abs(spatial_average_check(free.scenario, t) - 0.25) for t in (0.0, 200.0)]
    _record("8d", "spatial average of p_w (free)", f"{max(errs):.2e}", "< 1e-6", max(errs) < 1e-6)


@pytest.mark.parametrize("gamma", [0.001, 0.00025])
def test_8_grid_doubling(gamma):
    record = compute_table(reference_config().with_gamma(gamma), resolution_check=True)
    drift = max_drift(record)
    worst = max(record.resolution, key=lambda k: record.resolution[k]["rel_drift"])
    _record(f"8e[gamma={gamma:g}]", "grid-doubling drift on reported scalars", f"{drift:.2e} ({worst})",
            "< 1e-8", drift < 1e-8)
