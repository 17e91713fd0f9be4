"""Independent high-precision oracle for the closed-form test fixtures.

Every formula here is typed directly from its mathematical statement and
evaluated with mpmath at 50 significant digits.  Nothing imports the
package under test; agreement between these numbers and the library is
what the unit tests assert.  Run as a script to print the full table:

    python tests/_oracle.py
"""

import mpmath as mp

mp.mp.dps = 50

# --- baseline physical parameters (hot K-39 / He-3 cell) -------------------
# Rates and detunings are stored as plain frequencies in Hz; ratios and
# products below are convention-independent except where noted.
D_OPT = mp.mpf(100)             # optical depth
GAMMA_E = mp.mpf("13.5e9")      # excited-state half linewidth (full 27 GHz)
DELTA_S = mp.mpf("2700e9")      # signal detuning
DELTA_HF = mp.mpf("0.46e9")     # ground-state hyperfine splitting
J_EX = mp.mpf(1000)             # spin-exchange coupling, s^-1
GAMMA_S = mp.mpf("17.5")        # alkali spin decoherence, s^-1
GAMMA_K = mp.mpf("1e-4")        # noble-gas spin decoherence, s^-1
C_VAC = mp.mpf(299792458)       # exact SI light speed, m/s

# link / detector / source defaults
ALPHA2 = mp.mpf("0.84")
BETA2 = mp.mpf("0.16")
ETA_D = mp.mpf("0.6")
ETA_C = mp.mpf("0.8")
ETA_ST = mp.mpf("0.75")
LAMBDA_DARK = mp.mpf(100)       # s^-1
T_DETECT = mp.mpf("12.5e-9")    # s
P1 = mp.mpf("0.9")
REP_RATE = mp.mpf("10e6")       # s^-1
L_ATT = mp.mpf(22)              # km
C_FIBER = mp.mpf("2e8")         # m/s
F_RE_TARGET = mp.mpf("0.986")
F_TARG = mp.mpf("0.9")
P2_MAX_4LINK = mp.mpf("0.00093")
P_CHARGE_8LINK = mp.mpf("9.73e-5")


def complex_detunings():
    gs = mp.mpc(GAMMA_E, -DELTA_S)
    delta_a = DELTA_S + DELTA_HF
    ga = mp.mpc(GAMMA_E, -delta_a)
    gap = mp.mpc(GAMMA_E, -(delta_a + DELTA_HF))
    return gs, ga, gap


def storage_efficiency():
    eta1 = 1 - mp.sqrt(D_OPT) * GAMMA_E / (mp.sqrt(2) * DELTA_S)
    eta2 = mp.exp(-mp.pi * (GAMMA_S + GAMMA_K) / (2 * J_EX))
    return eta1, eta2, eta1 * eta2


def alpha_s():
    return mp.exp(-D_OPT * (GAMMA_E / DELTA_S) ** 2)


def optimal_reflectivity():
    a = alpha_s()
    return (1 - mp.sqrt(1 - a ** 2)) / a


def mu_s(r):
    # Eq.-13 convention: roundtrip transmission uses alpha_s
    return r * alpha_s()


def mu_s_exact(r):
    # exact convention: Re(kappa_s) tau = d gamma_e^2 / |Gamma_s|^2
    gs, _, _ = complex_detunings()
    return r * mp.exp(-D_OPT * GAMMA_E ** 2 / abs(gs) ** 2)


def suppression(r):
    m = mu_s(r)
    return (1 - m) / (2 * m)


def cavity_geometry(r):
    kappa_c = 8 * DELTA_HF * (1 - r) / r
    bandwidth = mp.mpf("0.3") * kappa_c
    # the one angular conversion: L = pi c / (2 * 2 pi delta_hf) = c / (4 delta_hf)
    length = C_VAC / (4 * DELTA_HF)
    tau = length / C_VAC
    return kappa_c, bandwidth, length, tau


def zeta1_for_target(r, f_target=F_RE_TARGET):
    gs, ga, _ = complex_detunings()
    x = suppression(r)
    return (1 / f_target - 1) * abs(ga) ** 2 / (x ** 2 * abs(gs) ** 2)


def readout_g2(r, zeta1):
    gs, ga, _ = complex_detunings()
    x = suppression(r)
    return 2 * x ** 2 * zeta1 * abs(gs) ** 2 / abs(ga) ** 2


def epsilon0(lam=LAMBDA_DARK, td=T_DETECT):
    return mp.exp(-lam * td)


def transmission(l0_km):
    return mp.exp(-mp.mpf(l0_km) / (2 * L_ATT))


def generation(l0_km, eta_s):
    """Term-by-term Eqs. (8)-(9)."""
    e0 = epsilon0()
    et = transmission(l0_km)
    lead = BETA2 * et * ETA_C * ETA_D
    dark = (1 - e0) * ALPHA2 ** 2
    loss = BETA2 ** 2 * et ** 2 * ETA_C ** 2 * ETA_D
    denom = lead + dark - loss
    f_gen = ALPHA2 * lead * eta_s / denom
    eta_gen = 2 * P1 * (e0 * lead + e0 * (1 - e0) * ALPHA2 ** 2 - e0 * loss)
    return f_gen, eta_gen, ALPHA2 * eta_s, 2 * P1 * lead


def q_value(eta_s):
    eta_tot = eta_s * eta_s * ETA_D     # eta_r = eta_s
    return P1 * ALPHA2 * eta_tot


def swap_probability(i, q):
    num = 2 ** i - (2 ** i - 1) * q
    den = 2 ** (i - 1) - (2 ** (i - 1) - 1) * q
    return q / 2 * num / den ** 2


def postselection(n, q):
    return (q / 2) / (2 ** n - (2 ** n - 1) * q) ** 2


def charging(n):
    if n == 2:
        p = P2_MAX_4LINK / (2 * (1 - ETA_ST) * P1)
    elif n == 3:
        p = P_CHARGE_8LINK
    else:
        raise ValueError(n)
    return p, 1 / (REP_RATE * p)


def total_time(n, l_total_km, eta_s, t_trans, t_ch):
    """Term-by-term Eq. (15)."""
    l0_km = mp.mpf(l_total_km) / 2 ** n
    t_att = l0_km * 1000 / C_FIBER + t_trans + t_ch
    q = q_value(eta_s)
    prod = mp.mpf(1)
    for i in range(1, n + 1):
        prod *= 2 ** i - (2 ** i - 1) * q
    eta_tot = eta_s * eta_s * ETA_D
    denom = (transmission(l0_km) * ETA_C * ETA_D * P1 ** (n + 3)
             * BETA2 * ALPHA2 ** (n + 2) * eta_tot ** (n + 2))
    return mp.mpf(3) ** (n + 1) / 2 * t_att * prod / denom


def direct_rate(l_km, r_src=mp.mpf("1e10")):
    return r_src * mp.exp(-mp.mpf(l_km) / L_ATT)


def crossover(n, m_mux, eta_s, t_trans, t_ch, r_src=mp.mpf("1e10")):
    """Bisection (1 km resolution) for repeater rate >= direct rate."""
    def gap(l):
        return m_mux / total_time(n, l, eta_s, t_trans, t_ch) - direct_rate(l, r_src)
    lo, hi = mp.mpf(1), mp.mpf(800)
    if gap(lo) >= 0:
        return lo
    if gap(hi) < 0:
        return None
    while hi - lo > 1:
        mid = (lo + hi) / 2
        if gap(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def main():
    gs, ga, gap = complex_detunings()
    print("|Gamma_s|^2/|Gamma_a|^2      =", mp.nstr(abs(gs) ** 2 / abs(ga) ** 2, 12))
    eta1, eta2, eta_s = storage_efficiency()
    print("eta1                         =", mp.nstr(eta1, 12))
    print("eta2                         =", mp.nstr(eta2, 12))
    print("eta_s                        =", mp.nstr(eta_s, 12))
    r = optimal_reflectivity()
    print("alpha_s                      =", mp.nstr(alpha_s(), 12))
    print("r_opt                        =", mp.nstr(r, 12))
    print("Re(kappa_s) tau              =", mp.nstr(D_OPT * GAMMA_E ** 2 / abs(gs) ** 2, 12))
    print("mu_s (eq13 convention)       =", mp.nstr(mu_s(r), 12))
    print("mu_s (exact convention)      =", mp.nstr(mu_s_exact(r), 12))
    print("x                            =", mp.nstr(suppression(r), 12))
    kc, bw, length, tau = cavity_geometry(r)
    print("kappa_c [GHz]                =", mp.nstr(kc / mp.mpf("1e9"), 12))
    print("delta_B [MHz]                =", mp.nstr(bw / mp.mpf("1e6"), 12))
    print("roundtrip L [m]              =", mp.nstr(length, 12))
    print("roundtrip tau [s]            =", mp.nstr(tau, 12))
    z1 = zeta1_for_target(r)
    print("zeta1 (F_re=0.986)           =", mp.nstr(z1, 12))
    print("g2 at calibrated zeta1       =", mp.nstr(readout_g2(r, z1), 12))
    print("g2 from F_re directly        =", mp.nstr(2 * (1 - F_RE_TARGET) / F_RE_TARGET, 12))
    print("1 - epsilon0                 =", mp.nstr(1 - epsilon0(), 12))
    print("eta_t(100 km)                =", mp.nstr(transmission(100), 12))
    f_gen, eta_gen, f_ap, e_ap = generation(100, eta_s)
    print("F_gen(100 km)                =", mp.nstr(f_gen, 12))
    print("eta_gen(100 km)              =", mp.nstr(eta_gen, 12))
    print("F_gen approx (a^2 eta_s)     =", mp.nstr(f_ap, 12))
    print("w_ent                        =", mp.nstr(ALPHA2 * eta_s, 12))
    print("w_vac                        =", mp.nstr(ALPHA2 * (1 - eta_s) + BETA2, 12))
    q = q_value(eta_s)
    print("q                            =", mp.nstr(q, 12))
    print("P_1                          =", mp.nstr(swap_probability(1, q), 12))
    print("P_2                          =", mp.nstr(swap_probability(2, q), 12))
    print("P_ps(n=1)                    =", mp.nstr(postselection(1, q), 12))
    print("P_ps(n=2)                    =", mp.nstr(postselection(2, q), 12))
    p4, tch4 = charging(2)
    p8, tch8 = charging(3)
    print("p_charge(n=2)                =", mp.nstr(p4, 12))
    print("t_ch(n=2) [ms]               =", mp.nstr(tch4 * 1000, 12))
    print("p_charge(n=3)                =", mp.nstr(p8, 12))
    print("t_ch(n=3) [ms]               =", mp.nstr(tch8 * 1000, 12))
    t_trans_phys = mp.pi / (2 * J_EX)
    print("t_trans = pi/(2J) [ms]       =", mp.nstr(t_trans_phys * 1000, 12))
    # figure profile pins t_trans = 1.5 ms; t_ch from the charging model
    tt_fig = mp.mpf("1.5e-3")
    t400 = total_time(2, 400, eta_s, tt_fig, tch4)
    print("T_tot(fig4, n=2, 400 km) [s] =", mp.nstr(t400, 12))
    print("rate(fig4, n=2, 400 km) [Hz] =", mp.nstr(1 / t400, 12))
    t400s = total_time(2, 400, eta_s, t_trans_phys, tch4)
    print("T_tot(sec5, n=2, 400 km) [s] =", mp.nstr(t400s, 12))
    for n, tch in ((1, tch4), (2, tch4)):
        for L in (200, 400):
            t = total_time(n, L, eta_s, t_trans_phys, tch)
            print(f"T_tot(sec5, n={n}, {L} km) [s] =", mp.nstr(t, 12))
    print("F_tot(n=2)                   =", mp.nstr(F_TARG * F_RE_TARGET ** 4, 12))
    print("F_tot(n=3)                   =", mp.nstr(F_TARG * F_RE_TARGET ** 5, 12))
    print("direct rate 600 km [Hz]      =", mp.nstr(direct_rate(600), 12))
    xo = crossover(2, 100, eta_s, tt_fig, tch4)
    print("crossover n=2 m=100 [km]     =", mp.nstr(xo, 12))
    # dark-count-vs-heralding diagnostic ratio at several L0
    for l0 in (25, 50, 85, 95, 100):
        lead = BETA2 * transmission(l0) * ETA_C * ETA_D
        ratio = (1 - epsilon0()) * ALPHA2 ** 2 / lead
        print(f"dark/herald ratio L0={l0:<3d} km  =", mp.nstr(ratio, 8))
    # exact vs approximate generation agreement
    for l0 in (25, 50, 85, 100):
        f_gen, eta_gen, f_ap, e_ap = generation(l0, eta_s)
        print(f"gen approx rel.err L0={l0:<3d}    =",
              mp.nstr(abs(e_ap - eta_gen) / eta_gen, 8),
              mp.nstr(abs(f_ap - f_gen) / f_gen, 8))


if __name__ == "__main__":
    main()
