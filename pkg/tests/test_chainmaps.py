import random

import pytest

from bandkh.diagram import Diagram, apply_r2, apply_r3, mirror
from bandkh.homology import homology, table_isomorphic
from bandkh.chainmaps import (
    ChainMapError,
    c_prime_columns,
    duality_check,
    eta,
    f_embed,
    g_conjugates_differentials,
    g_embed,
    gamma_r2,
    iota_embed,
    long_exact_sequence_check,
    membership_in_c_prime,
    mirror_intertwines,
    mirror_map,
    mat_add,
    mats_equal,
    r2_pair,
    r3_data,
    reorder_iso,
    rho_I,
    rho_II,
    rho_II_section,
    skein_triple,
    viro_alpha,
    viro_alpha_bar,
    viro_beta,
    viro_beta_bar,
    viro_gamma,
    viro_gamma_hat,
)
from bandkh.state_complex import GradedComplex, _mat_mul

from helpers import (
    ALL_SURFACES,
    ANNULUS,
    DISK,
    MOEBIUS,
    TORUS_HOLE,
    loops_diagram,
    random_diagram,
    surface_words,
    trefoil,
    triangle_closure,
)


def suite(seed, count_per_surface=2, max_crossings=3):
    rng = random.Random(seed)
    out = []
    for surface in ALL_SURFACES:
        for _ in range(count_per_surface):
            out.append(random_diagram(surface, rng, max_crossings=max_crossings))
    return out


def test_viro_maps_are_chain_maps_and_sequence_is_exact():
    for d in suite(31) + [trefoil()]:
        for p in range(d.n_crossings):
            t = skein_triple(d, p)
            assert viro_alpha(t).commutes()
            assert viro_beta(t).commutes()
            assert viro_gamma(t).commutes()
            assert viro_gamma_hat(t).commutes(-1)
            composite = viro_beta(t).compose(viro_alpha(t))
            assert all(not any(r) for m in composite.blocks.values() for r in m)
            report = long_exact_sequence_check(t)
            assert report.ok, report.failures
            assert report.positions_checked > 0


def test_viro_splittings():
    d = suite(32, 1)[1]
    for p in range(d.n_crossings):
        t = skein_triple(d, p)
        beta, beta_bar = viro_beta(t), viro_beta_bar(t)
        alpha, alpha_bar = viro_alpha(t), viro_alpha_bar(t)
        for key in t.c0.buckets:
            n = t.c0.dim(key)
            prod = _mat_mul(beta.block(beta_bar.grading(key)), beta_bar.block(key))
            assert mats_equal(prod, [[1 if r == c else 0 for c in range(n)]
                                     for r in range(n)])
        for key in t.cinf.buckets:
            n = t.cinf.dim(key)
            prod = _mat_mul(alpha_bar.block(alpha.grading(key)), alpha.block(key))
            ident = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
            assert mats_equal(prod, ident)


def test_gamma_hat_is_minus_one_to_m_times_gamma():
    d = suite(33, 1)[2]
    for p in range(d.n_crossings):
        t = skein_triple(d, p)
        g, gh = viro_gamma(t), viro_gamma_hat(t)
        for key, bucket in t.c0.buckets.items():
            gb, ghb = g.block(key), gh.block(key)
            for c, state in enumerate(bucket):
                sign = (-1) ** state.m_neg
                for r in range(len(gb)):
                    assert ghb[r][c] == sign * gb[r][c]


def test_eta_antichain_and_skew_commutation():
    for d in suite(34, 1):
        cx = GradedComplex(d)
        e = eta(cx)
        assert e.commutes(-1)
        square = e.compose(e)
        for key in cx.buckets:
            n = cx.dim(key)
            assert mats_equal(square.block(key),
                              [[1 if r == c else 0 for c in range(n)] for r in range(n)])
        for p in range(d.n_crossings):
            t = skein_triple(d, p)
            al = viro_alpha(t)
            lhs = al.compose(eta(t.cinf))
            rhs = eta(t.cp).compose(al).scale(-1)
            for key in t.cinf.buckets:
                assert mats_equal(lhs.block(key), rhs.block(key))


def test_g_map_conjugates_d_to_d_plus():
    for d in suite(35, 1):
        assert g_conjugates_differentials(GradedComplex(d))


def test_mirror_map_intertwines_and_duality_holds():
    for d in suite(36, 1) + [trefoil()]:
        assert mirror_intertwines(d)
        report = duality_check(d)
        assert report.ok, report.failures


def test_duality_zero_crossing_self_mirror():
    report = duality_check(loops_diagram(ANNULUS, "a"))
    assert report.ok


def test_reorder_iso_chain_map_and_naturality():
    rng = random.Random(37)
    for d in suite(38, 1):
        if d.n_crossings < 2:
            continue
        n = d.n_crossings
        p1 = list(range(n)); rng.shuffle(p1)
        f12 = reorder_iso(d, p1)
        assert f12.commutes()
        # naturality: composing two reorderings equals the combined one
        from bandkh.diagram import reorder_crossings
        d2 = reorder_crossings(d, p1)
        p2 = list(range(n)); rng.shuffle(p2)
        f23 = reorder_iso(d2, p2)
        p13 = [p1[p2[k]] for k in range(n)]
        f13 = reorder_iso(d, p13)
        comp = f23.compose(f12)
        for key in f13.source.buckets:
            assert mats_equal(comp.block(key), f13.block(key))


def test_reorder_transposition_signs():
    d = random_diagram(DISK, random.Random(39), max_crossings=2)
    if d.n_crossings == 2:
        f = reorder_iso(d, [1, 0])
        for key, bucket in f.source.buckets.items():
            blk = f.block(key)
            for c, state in enumerate(bucket):
                negatives = sum(1 for m in state.markers if m < 0)
                expected = -1 if negatives == 2 else 1
                row = f.target.locate(tuple(reversed(state.markers))
                                      if False else
                                      tuple(state.markers[[1, 0][k]] for k in range(2)),
                                      _relabel(f, state))[1]
                assert blk[row][c] == expected


def _relabel(f, state):
    src = f.source.smoothing(state.markers)
    by_key = {c.key: lab for c, lab in zip(src.circles, state.labels)}
    markers2 = tuple(state.markers[[1, 0][k]] for k in range(2))
    tgt = f.target.smoothing(markers2)
    return tuple(by_key[c.key] for c in tgt.circles)


def test_rho_I_chain_map_and_iso():
    rng = random.Random(40)
    for d in suite(41, 1):
        sites = [("edge", k) for k in range(len(d.edges))]
        sites += [("loop", k) for k in range(len(d.loops))]
        site = rng.choice(sites)
        side = rng.choice(("left", "right"))
        cm, kinked = rho_I(d, site, side)
        assert cm.commutes()
        assert table_isomorphic(homology(GradedComplex(d)),
                                homology(GradedComplex(kinked)), (-1, -3))


def test_rho_II_full_identity_suite():
    rng = random.Random(42)
    for d in suite(43, 1):
        with_loop = Diagram(d.surface, d.crossings, d.edges, d.loops + ((),))
        fresh = len(with_loop.loops) - 1
        sites = [("edge", k) for k in range(len(d.edges))]
        sites += [("loop", k) for k in range(len(d.loops))]
        if not sites:
            continue
        big = apply_r2(with_loop, ("loop", fresh), rng.choice(sites))
        pair = r2_pair(big, 0, 1)
        r2m = rho_II(pair)
        assert r2m.commutes()
        assert gamma_r2(pair).commutes()
        f, g, io, gm = f_embed(pair), g_embed(pair), iota_embed(pair), gamma_r2(pair)
        iog = io.compose(gm)
        # d f = f d + (-1)^m iota gamma
        for key in pair.small.buckets:
            i, j, s = key
            lhs = _mat_mul(pair.big.differential(f.grading(key)), f.block(key))
            fd = _mat_mul(f.block((i - 2, j, s)), pair.small.differential(key))
            cols = pair.small.buckets[key]
            blk = iog.block(key)
            corr = [[blk[r][c] * (-1) ** cols[c].m_neg for c in range(len(cols))]
                    for r in range(len(blk))]
            assert mats_equal(lhs, mat_add(fd, corr))
        # d g = g d + (-1)^{m+1} iota
        for key in pair.tilde.buckets:
            i, j, s = key
            lhs = _mat_mul(pair.big.differential(g.grading(key)), g.block(key))
            gd = _mat_mul(g.block((i - 2, j, s)), pair.tilde.differential(key))
            cols = pair.tilde.buckets[key]
            blk = io.block(key)
            corr = [[blk[r][c] * (-1) ** (cols[c].m_neg + 1)
                     for c in range(len(cols))] for r in range(len(blk))]
            assert mats_equal(lhs, mat_add(gd, corr))
        # rho_II has a left inverse on its image, given by the projection
        sec = rho_II_section(pair)
        comp = sec.compose(r2m)
        for key in pair.small.buckets:
            n = pair.small.dim(key)
            assert mats_equal(comp.block(key),
                              [[1 if r == c else 0 for c in range(n)] for r in range(n)])
        # homology invariance of the move
        assert table_isomorphic(homology(GradedComplex(with_loop)),
                                homology(GradedComplex(big)), (0, 0))
        # eta skew-commutes with f and with g.gamma
        e_small, e_big = eta(pair.small), eta(pair.big)
        for chmap in (f, g.compose(gm)):
            lhs = chmap.compose(e_small)
            rhs = e_big.compose(chmap).scale(-1)
            for key in pair.small.buckets:
                assert mats_equal(lhs.block(key), rhs.block(key))


def test_r3_homology_invariance_all_closures():
    for surface in ALL_SURFACES:
        for closure in range(5):
            for b_over in (True, False):
                word = surface_words(surface)[-1]
                d, site = triangle_closure(surface, closure, word, b_over=b_over)
                moved = apply_r3(d, site)
                assert table_isomorphic(homology(GradedComplex(d)),
                                        homology(GradedComplex(moved)), (0, 0))


def test_rho_III_identities():
    for surface, closure in ((DISK, 0), (ANNULUS, 3), (MOEBIUS, 4), (TORUS_HOLE, 1)):
        word = surface_words(surface)[-1]
        d, site = triangle_closure(surface, closure, word, b_over=True)
        data = r3_data(d, site)
        assert data.nu.commutes()
        assert data.f_inf.commutes()
        # rho_III . alpha == alpha' . f  everywhere
        lhs = data.rho_III.compose(viro_alpha(data.triple))
        rhs = viro_alpha(data.triple2).compose(data.f_inf)
        for key in data.triple.cinf.buckets:
            assert mats_equal(lhs.block(key), rhs.block(key))
        # beta' . rho_III == rho . beta, on the subcomplex C'
        b2r = viro_beta(data.triple2).compose(data.rho_III)
        rb = data.rho.compose(viro_beta(data.triple))
        for key in data.triple.cp.buckets:
            cols = c_prime_columns(data, key)
            assert mats_equal(_mat_mul(b2r.block(key), cols),
                              _mat_mul(rb.block(key), cols))
            # C' is a subcomplex and rho_III is a chain map on it
            img = _mat_mul(data.triple.cp.differential(key), cols)
            low = (key[0] - 2, key[1], key[2])
            for c in range(len(img[0]) if img else 0):
                assert membership_in_c_prime(data, low, [row[c] for row in img])
            lhs2 = _mat_mul(data.triple2.cp.differential(key),
                            _mat_mul(data.rho_III.block(key), cols))
            assert mats_equal(lhs2, _mat_mul(data.rho_III.block(low), img))
        # f . gamma_hat == gamma_hat' . rho on the image subcomplex
        fg = data.f_inf.compose(viro_gamma_hat(data.triple))
        gr = viro_gamma_hat(data.triple2).compose(data.rho)
        r2m = rho_II(data.pair)
        for key in data.pair.small.buckets:
            cols = r2m.block(key)
            assert mats_equal(_mat_mul(fg.block(key), cols),
                              _mat_mul(gr.block(key), cols))


def test_rho_III_rejects_wrong_parity():
    d, site = triangle_closure(DISK, 0, b_over=False)
    with pytest.raises(ChainMapError):
        r3_data(d, site)
