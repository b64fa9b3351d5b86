"""Independent reference solvers used to validate the library's closed forms
and SDP blocks: grid searches over powers and beams, built directly from the
signal-model formulas with no shared code paths."""

import numpy as np

from covertnoma.physics import FdBeam, IosBeam


def random_point(rng, scenario, channels):
    """A random feasible-dimension (not necessarily constraint-feasible)
    surface/receiver design."""
    K, M = scenario.num_elements, scenario.num_antennas
    amp = rng.uniform(0.1, scenario.amp_max, (2, K))
    ph = rng.uniform(0.0, 2.0 * np.pi, (2, K))
    ios = IosBeam(amp_t=amp[0], amp_r=amp[1], phase_t=ph[0], phase_r=ph[1])
    w = rng.standard_normal((2, M)) + 1j * rng.standard_normal((2, M))
    fd = FdBeam(w_t=w[0] / np.linalg.norm(w[0]),
                w_r=w[1] / np.linalg.norm(w[1]))
    return ios, fd


def power_grid_search(scenario, gains, kappa, n=10_000):
    """Best (p_a, p_j) on an (n+1)x(n+1) grid, exploiting that the rate is
    decreasing in p_j (so the smallest covert-feasible p_j per p_a wins) via
    a vectorized bisection over the p_j axis.

    Returns (p_a, p_j, rate) or None when no grid point is feasible.
    """
    s, g = scenario, gains
    so, sb, sw = s.noise_ios, s.noise_bob, s.noise_willie
    mu = 2.0 ** s.target_rate - 1.0
    pg = s.budget_grace
    pa = np.linspace(0.0, s.budget_alice, n + 1)
    pj_grid = np.linspace(0.0, s.budget_jam, n + 1)
    amp_noise = (g.amp_t + g.amp_r) * so
    frob_noise = (g.frob_t + g.frob_r) * so

    def covert_ok(pa_v, pj_v):
        lhs = pa_v * g.gaw2 + g.how_t2 * so
        rhs = (kappa - 1.0) * (pg * g.ggw2 + pj_v * g.gbw_wt2
                               + g.how_r2 * so + sw)
        return lhs <= rhs

    lo = np.zeros(pa.shape, dtype=int)
    hi = np.full(pa.shape, n, dtype=int)
    feas_any = covert_ok(pa, pj_grid[n])
    hi[covert_ok(pa, pj_grid[0])] = 0
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        ok = covert_ok(pa, pj_grid[mid])
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, np.minimum(mid + 1, n))
    pj = pj_grid[np.minimum(hi, n)]

    omega = amp_noise + s.si_level * pj * g.si2
    qos = pg * g.ggb2 >= mu * (pa * g.gab2 + omega + sb)
    surf = pa * g.tha2 + pg * g.rhg2 + pj * g.rbw2 + frob_noise <= s.budget_ios
    feas = feas_any & qos & surf
    if not np.any(feas):
        return None
    rate = np.where(feas, np.log2(1.0 + pa * g.gab2 / (omega + sb)), -1.0)
    i = int(np.argmax(rate))
    return float(pa[i]), float(pj[i]), float(rate[i])


# --- toy-scale surface search (K = 2, M = 1) ---------------------------------

def _side_features(V, h_user, h_ow, hob_row, extra=None):
    """Phase-invariant scalars of one surface side for all candidate rows of
    V (n x 2): link gain to Bob, leakage to Willie, and the norms."""
    f = {
        "gb2": np.abs(V @ (hob_row * h_user)) ** 2,
        "gw2": np.abs(V @ (h_ow * h_user)) ** 2,
        "how2": np.abs(V) ** 2 @ np.abs(h_ow) ** 2,
        "amp": np.abs(V * hob_row) ** 2 @ np.ones(2),
        "th2": np.abs(V) ** 2 @ np.abs(h_user) ** 2,
        "frob": np.abs(V) ** 2 @ np.ones(2),
    }
    if extra is not None:
        f.update(extra(V))
    return f


def _side_grid(lo, hi, n_amp, n_phase):
    """All (a1, a2, dphase) combos as complex rows, one global phase fixed."""
    a1 = np.linspace(lo[0], hi[0], n_amp)
    a2 = np.linspace(lo[1], hi[1], n_amp)
    dp = np.linspace(lo[2], hi[2], n_phase, endpoint=False) \
        if hi[2] - lo[2] >= 2.0 * np.pi - 1e-12 \
        else np.linspace(lo[2], hi[2], n_phase)
    a1, a2, dp = np.meshgrid(a1, a2, dp, indexing="ij")
    V = np.stack([a1.ravel().astype(complex),
                  a2.ravel() * np.exp(1j * dp.ravel())], axis=1)
    params = np.stack([a1.ravel(), a2.ravel(), dp.ravel()], axis=1)
    return V, params


def surface_grid_search(scenario, channels, powers, fd, kappa,
                        n_amp=16, n_phase=32, refine=2, block=512):
    """Discretized search over K = 2 surface coefficients at M = 1.

    One global phase per side is irrelevant (every constraint involves only
    per-side magnitudes), leaving a 6-dim space searched exhaustively and
    then refined around the incumbent.  Returns the best audited rate.
    """
    s, c = scenario, channels
    assert s.num_elements == 2 and s.num_antennas == 1
    so, sb, sw = s.noise_ios, s.noise_bob, s.noise_willie
    pa, pg, pj = powers.p_a, powers.p_g, powers.p_j
    mu = 2.0 ** s.target_rate - 1.0
    hob = (fd.w_r.conj() @ c.H_ob).ravel()
    hbo_wt = (c.H_bo @ fd.w_t).ravel()
    si_direct = complex(fd.w_r.conj() @ c.H_bb @ fd.w_t)
    bw_direct = complex(c.h_bw @ fd.w_t)

    def extras_r(V):
        return {
            "si2": np.abs(V @ (hob * hbo_wt) + si_direct) ** 2,
            "gbw2": np.abs(V @ (c.h_ow * hbo_wt) + bw_direct) ** 2,
            "rbw2": np.abs(V) ** 2 @ np.abs(hbo_wt) ** 2,
        }

    full = (np.array([0.0, 0.0, 0.0]),
            np.array([s.amp_max, s.amp_max, 2.0 * np.pi]))
    bounds_t = bounds_r = full
    best = (-1.0, None, None)
    for _ in range(refine + 1):
        Vt, pt = _side_grid(*bounds_t, n_amp, n_phase)
        Vr, pr = _side_grid(*bounds_r, n_amp, n_phase)
        ft = _side_features(Vt, c.h_ao, c.h_ow, hob)
        fr = _side_features(Vr, c.h_go, c.h_ow, hob, extras_r)
        for i0 in range(0, Vt.shape[0], block):
            sl = slice(i0, min(i0 + block, Vt.shape[0]))
            gab2 = ft["gb2"][sl][:, None]
            omega = ((ft["amp"][sl][:, None] + fr["amp"][None, :]) * so
                     + s.si_level * pj * fr["si2"][None, :])
            sig_a = pa * gab2
            qos = pg * fr["gb2"][None, :] >= mu * (sig_a + omega + sb)
            sic = fr["gb2"][None, :] >= gab2
            covert = (pa * ft["gw2"][sl][:, None] + ft["how2"][sl][:, None] * so
                      <= (kappa - 1.0)
                      * (pg * fr["gw2"][None, :] + pj * fr["gbw2"][None, :]
                         + fr["how2"][None, :] * so + sw))
            out = (pa * ft["th2"][sl][:, None] + pg * fr["th2"][None, :]
                   + pj * fr["rbw2"][None, :]
                   + (ft["frob"][sl][:, None] + fr["frob"][None, :]) * so)
            feas = qos & sic & covert & (out <= s.budget_ios)
            if not np.any(feas):
                continue
            rate = np.where(feas, np.log2(1.0 + sig_a / (omega + sb)), -1.0)
            i, j = np.unravel_index(int(np.argmax(rate)), rate.shape)
            if rate[i, j] > best[0]:
                best = (float(rate[i, j]), pt[i0 + i].copy(), pr[j].copy())
        if best[1] is None:
            return best[0]

        def shrink(center, lo, hi):
            step = (hi - lo) / np.array([n_amp - 1, n_amp - 1,
                                         max(n_phase - 1, 1)])
            new_lo = np.maximum(center - step, [0.0, 0.0, -np.inf])
            new_hi = np.minimum(center + step,
                                [s.amp_max, s.amp_max, np.inf])
            return new_lo, new_hi

        bounds_t = shrink(best[1], *bounds_t)
        bounds_r = shrink(best[2], *bounds_r)
    return best[0]


# --- toy-scale receiver beam searches (M = 2) ---------------------------------

def sphere_grid(n_polar=100, n_phase=100):
    """1e4 unit vectors in C^2, global phase fixed."""
    t = np.linspace(0.0, np.pi / 2.0, n_polar)
    p = np.linspace(0.0, 2.0 * np.pi, n_phase, endpoint=False)
    T, P = np.meshgrid(t, p, indexing="ij")
    return np.stack([np.cos(T).ravel().astype(complex),
                     (np.sin(T) * np.exp(1j * P)).ravel()], axis=1)


def receive_grid_search(scenario, channels, powers, ios, w_t, kappa, W):
    """Best covert rate over candidate unit receive beams W (n x M),
    enforcing the second user's rate floor."""
    s, c = scenario, channels
    so, sb = s.noise_ios, s.noise_bob
    pa, pg, pj = powers.p_a, powers.p_g, powers.p_j
    mu = 2.0 ** s.target_rate - 1.0
    vt, vr = ios.coeff_t, ios.coeff_r
    a_vec = c.H_ob @ (vt * c.h_ao)
    g_vec = c.H_ob @ (vr * c.h_go)
    si_vec = (c.H_bb + c.H_ob @ np.diag(vr) @ c.H_bo) @ w_t
    WH = W.conj()
    gab2 = np.abs(WH @ a_vec) ** 2
    ggb2 = np.abs(WH @ g_vec) ** 2
    si2 = np.abs(WH @ si_vec) ** 2
    amp = (np.abs(WH @ (c.H_ob * vt[None, :])) ** 2
           + np.abs(WH @ (c.H_ob * vr[None, :])) ** 2).sum(axis=1)
    omega = amp * so + s.si_level * pj * si2
    feas = pg * ggb2 >= mu * (pa * gab2 + omega + sb)
    if not np.any(feas):
        return None
    rate = np.where(feas, np.log2(1.0 + pa * gab2 / (omega + sb)), -1.0)
    return float(np.max(rate))


def transmit_grid_search(scenario, channels, powers, ios, w_r, kappa, W):
    """Smallest residual self-interference over candidate unit transmit
    beams W, under the covertness and surface-output constraints.  Returns
    (min leakage, scale) or None."""
    s, c = scenario, channels
    so, sw = s.noise_ios, s.noise_willie
    pa, pg, pj = powers.p_a, powers.p_g, powers.p_j
    vt, vr = ios.coeff_t, ios.coeff_r
    si_chain = c.H_bb + c.H_ob @ np.diag(vr) @ c.H_bo
    gj_row = w_r.conj() @ si_chain
    gbw_row = c.h_ow @ (np.diag(vr) @ c.H_bo) + c.h_bw
    leak = np.abs(W @ gj_row) ** 2
    gbw2 = np.abs(W @ gbw_row) ** 2
    rbw2 = np.abs((vr[:, None] * (c.H_bo @ W.T))) ** 2
    rbw2 = rbw2.sum(axis=0)
    how_t2 = float(np.sum(np.abs(c.h_ow * vt) ** 2))
    how_r2 = float(np.sum(np.abs(c.h_ow * vr) ** 2))
    gaw2 = abs(c.h_ow @ (vt * c.h_ao)) ** 2
    ggw2 = abs(c.h_ow @ (vr * c.h_go)) ** 2
    covert = (pa * gaw2 + how_t2 * so
              <= (kappa - 1.0) * (pg * ggw2 + pj * gbw2 + how_r2 * so + sw))
    tha2 = float(np.sum(np.abs(vt * c.h_ao) ** 2))
    rhg2 = float(np.sum(np.abs(vr * c.h_go) ** 2))
    frob = float(np.sum(np.abs(vt) ** 2) + np.sum(np.abs(vr) ** 2))
    out = pa * tha2 + pg * rhg2 + pj * rbw2 + frob * so
    feas = covert & (out <= s.budget_ios)
    if not np.any(feas):
        return None
    return float(np.min(np.where(feas, leak, np.inf)))
