from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clipscaffold.config import RefineConfig, SolveConfig
from clipscaffold.constraints import compile_constraints
from clipscaffold.errors import ClusterError, DegeneratePointsError
from clipscaffold.extrusion import (
    Prism,
    cover_cost,
    duplicate_paths,
    fit_obb,
    init_prism,
    kmeans_1d,
    prism_distance,
    refine_local,
    resolve_constraints,
    solution_pointsets,
    solve,
    thickness_cost,
    total_cost,
)
from clipscaffold.model import (
    DepthOrder,
    MultipleObjects,
    SameDepth,
    SameThickness,
)
from clipscaffold.shape import GuidingShape, PointSet
from clipscaffold.synthetic import generate_scene, sample_box_surface

import oracles
from conftest import UNIT_SQUARE, make_clipart


def square_prism(d=1.0, z=0.5) -> Prism:
    return Prism(0, UNIT_SQUARE, d=d, z=z)


# --- prism distance ---------------------------------------------------------------


def test_interior_point_is_exactly_zero():
    assert prism_distance((0.5, 0.5, 0.5), square_prism()) == 0.0


def test_lateral_face_distance():
    assert prism_distance((2.0, 0.5, 0.5), square_prism()) == pytest.approx(1.0, abs=1e-12)


def test_cap_rim_distance_matches_brute_force(rng):
    # closed form says sqrt(2); confirm against a 1e6-sample surface oracle
    surface = oracles.sample_prism_surface(UNIT_SQUARE, 0.5, 1.0, 1_000_000, rng)
    brute = oracles.brute_force_prism_distance((2.0, 0.5, 2.0), UNIT_SQUARE, 0.5, 1.0, surface)
    got = prism_distance((2.0, 0.5, 2.0), square_prism())
    assert got == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert abs(got - brute) <= 2e-3


def test_pure_cap_distance():
    assert prism_distance((0.5, 0.5, 1.75), square_prism()) == pytest.approx(0.75, abs=1e-12)


def test_distance_against_sampling_oracle_random_prisms(rng):
    for _ in range(15):
        poly = oracles.star_polygon(rng, 10, 0.06, 0.18)
        z_c = rng.uniform(-0.3, 0.3)
        d = rng.uniform(0.03, 0.35)
        prism = Prism(0, poly, d=d, z=z_c)
        surface = oracles.sample_prism_surface(poly, z_c, d, 300_000, rng)
        for _ in range(4):
            p = rng.uniform([-0.1, -0.1, -0.8], [1.1, 1.1, 0.8])
            brute = oracles.brute_force_prism_distance(p, poly, z_c, d, surface)
            assert abs(prism_distance(p, prism) - brute) <= 4e-3


@settings(max_examples=200, deadline=None)
@given(
    x0=st.floats(0.0, 0.4),
    y0=st.floats(0.0, 0.4),
    w=st.floats(0.05, 0.5),
    h=st.floats(0.05, 0.5),
    zc=st.floats(-0.5, 0.5),
    d=st.floats(0.01, 0.8),
    px=st.floats(-1.0, 2.0),
    py=st.floats(-1.0, 2.0),
    pz=st.floats(-2.0, 2.0),
)
def test_box_prism_matches_analytic_box_distance(x0, y0, w, h, zc, d, px, py, pz):
    # for a rectangular footprint the prism is a box with an exact distance
    poly = np.array([[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]])
    dx = max(x0 - px, 0.0, px - (x0 + w))
    dy = max(y0 - py, 0.0, py - (y0 + h))
    dz = max((zc - d / 2) - pz, 0.0, pz - (zc + d / 2))
    want = math.sqrt(dx * dx + dy * dy + dz * dz)
    got = prism_distance((px, py, pz), Prism(0, poly, d=d, z=zc))
    assert got == pytest.approx(want, abs=1e-9)


def test_zero_distance_iff_inside(rng):
    poly = oracles.star_polygon(rng, 12, 0.1, 0.35)
    prism = Prism(0, poly, d=0.4, z=0.1)
    for _ in range(500):
        p = rng.uniform([-0.2, -0.2, -0.6], [1.2, 1.2, 0.8])
        inside = oracles.inside_crossing(p[:2], poly) and abs(p[2] - 0.1) <= 0.2
        dist = prism_distance(p, prism)
        if inside:
            assert dist == 0.0
        else:
            assert dist > 0.0


# --- costs ------------------------------------------------------------------------


def test_cover_zero_when_all_points_interior(rng):
    pts = np.column_stack([rng.uniform(0.1, 0.9, (80, 2)), rng.uniform(0.1, 0.9, 80)])
    assert cover_cost(PointSet(0, pts), square_prism()) == 0.0


def test_cover_single_lateral_point():
    ps = PointSet(0, np.array([[1.3, 0.5, 0.5]]))
    assert cover_cost(ps, square_prism()) == pytest.approx(0.3, abs=1e-12)


def test_cover_empty_set_is_zero():
    assert cover_cost(PointSet(0, np.empty((0, 3))), square_prism()) == 0.0


def test_cover_equals_term_by_term_resummation(rng):
    poly = oracles.star_polygon(rng, 9, 0.1, 0.3)
    prism = Prism(0, poly, d=rng.uniform(0.1, 0.5), z=rng.uniform(-0.2, 0.2))
    pts = rng.uniform([-0.2, -0.2, -0.6], [1.2, 1.2, 0.6], (50, 3))
    got = cover_cost(PointSet(0, pts), prism)
    want = math.fsum(prism_distance(p, prism) for p in pts)
    assert got == pytest.approx(want, abs=1e-9)


def test_thickness_cost_examples():
    def sol_with(ds):
        prisms = [Prism(k, UNIT_SQUARE, d=d, z=0.0) for k, d in enumerate(ds)]
        from clipscaffold.extrusion import _with_costs

        return _with_costs(prisms, [(k, 0) for k in range(len(ds))], 0.1, [PointSet(k, np.empty((0, 3))) for k in range(len(ds))])

    assert thickness_cost(sol_with([1.0, 2.0])) == pytest.approx(5.0)
    assert thickness_cost(sol_with([1e-9, 1e-9])) == pytest.approx(0.0, abs=1e-12)
    assert thickness_cost(sol_with([0.5, 0.5, 0.5])) == pytest.approx(0.75)


def test_total_cost_cover_term_zero(rng):
    pts = np.column_stack([rng.uniform(0.2, 0.8, (40, 2)), rng.uniform(0.2, 0.8, 40)])
    ps = PointSet(0, pts)
    from clipscaffold.extrusion import _with_costs

    sol = _with_costs([square_prism()], [(0, 0)], 0.1, [ps])
    assert total_cost(sol, [ps]) == pytest.approx(0.1, abs=1e-12)
    assert sol.total_cost == pytest.approx(0.1, abs=1e-12)


def test_total_cost_omega_zero_equals_cover(rng):
    poly = oracles.star_polygon(rng, 8, 0.1, 0.3)
    pts = rng.uniform([-0.1, -0.1, -0.5], [1.1, 1.1, 0.5], (60, 3))
    ps = PointSet(0, pts)
    prism = Prism(0, poly, d=0.2, z=0.0)
    from clipscaffold.extrusion import _with_costs

    sol = _with_costs([prism], [(0, 0)], 0.0, [ps])
    assert sol.total_cost == pytest.approx(cover_cost(ps, prism), abs=1e-12)


def test_total_cost_decomposition_random(rng):
    from clipscaffold.extrusion import _with_costs

    for _ in range(10):
        n = int(rng.integers(1, 5))
        prisms, psets = [], []
        for k in range(n):
            poly = oracles.star_polygon(rng, 8, 0.08, 0.25)
            prisms.append(Prism(k, poly, d=rng.uniform(0.05, 0.4), z=rng.uniform(-0.3, 0.3)))
            psets.append(PointSet(k, rng.uniform([-0.1, -0.1, -0.6], [1.1, 1.1, 0.6], (30, 3))))
        omega = rng.uniform(0, 0.2)
        sol = _with_costs(prisms, [(k, 0) for k in range(n)], omega, psets)
        want = math.fsum(cover_cost(ps, v) for ps, v in zip(psets, prisms))
        want += omega * math.fsum(v.d**2 for v in prisms)
        assert sol.total_cost == pytest.approx(want, abs=1e-9)
        assert total_cost(sol, psets) == pytest.approx(want, abs=1e-9)


# --- OBB and initialization ---------------------------------------------------------


def test_obb_axis_aligned_box_extents():
    corners = np.array(
        [[x, y, z] for x in (0, 2.0) for y in (0, 1.0) for z in (0, 0.5)]
    )
    obb = fit_obb(PointSet(0, corners))
    assert sorted(np.round(obb.extents, 9)) == pytest.approx([0.5, 1.0, 2.0])
    assert np.allclose(obb.center, [1.0, 0.5, 0.25], atol=1e-9)


def test_obb_single_point():
    obb = fit_obb(PointSet(0, np.array([[0.3, 0.4, 0.5]])))
    assert np.allclose(obb.extents, 0.0)
    assert np.allclose(obb.center, [0.3, 0.4, 0.5])


def test_obb_rotation_invariant_extents(rng):
    # rotate-back oracle: a 2 x 1 x 0.5 corner box rotated 30 degrees about z
    # must fit with the same extents as the unrotated box
    corners = np.array(
        [[x, y, z] for x in (0, 2.0) for y in (0, 1.0) for z in (0, 0.5)]
    ) - [1.0, 0.5, 0.25]
    ang = math.radians(30)
    rot = np.array(
        [[math.cos(ang), -math.sin(ang), 0], [math.sin(ang), math.cos(ang), 0], [0, 0, 1]]
    )
    plain = fit_obb(PointSet(0, corners))
    rotated = fit_obb(PointSet(0, corners @ rot.T))
    assert sorted(rotated.extents) == pytest.approx(sorted(plain.extents), rel=1e-6)
    assert sorted(rotated.extents) == pytest.approx([0.5, 1.0, 2.0], rel=1e-6)


def test_obb_noisy_cloud_extents_stay_close(rng):
    base = rng.uniform([0, 0, 0], [2.0, 1.0, 0.5], (4000, 3)) - [1.0, 0.5, 0.25]
    ang = math.radians(30)
    rot = np.array(
        [[math.cos(ang), -math.sin(ang), 0], [math.sin(ang), math.cos(ang), 0], [0, 0, 1]]
    )
    obb = fit_obb(PointSet(0, base @ rot.T))
    assert sorted(obb.extents) == pytest.approx([0.5, 1.0, 2.0], rel=0.05)


def test_obb_empty_raises():
    with pytest.raises(DegeneratePointsError):
        fit_obb(PointSet(0, np.empty((0, 3))))


def test_obb_contains_all_points(rng):
    pts = rng.normal(size=(500, 3)) * [2.0, 0.7, 0.1]
    obb = fit_obb(PointSet(0, pts))
    proj = (pts - obb.center) @ obb.axes.T
    assert np.all(np.abs(proj) <= obb.extents / 2 + 1e-9)


def test_init_prism_recovers_cube(rng):
    samples = oracles.sample_prism_surface(UNIT_SQUARE, 0.5, 1.0, 4000, rng)
    prism = init_prism(UNIT_SQUARE, PointSet(0, samples), omega=0.01)
    assert abs(prism.d - 1.0) / 1.0 <= 0.10
    assert abs(prism.z - 0.5) <= 0.05


def test_init_prism_flat_plate_clamps_to_d_min(rng):
    pts = np.column_stack([rng.uniform(0.1, 0.9, (200, 2)), np.zeros(200)])
    cfg = SolveConfig()
    prism = init_prism(UNIT_SQUARE, PointSet(0, pts), omega=0.01, config=cfg)
    assert prism.d == pytest.approx(cfg.d_min)
    assert prism.z == pytest.approx(0.0, abs=1e-12)


def test_init_prism_empty_fallback():
    prism = init_prism(UNIT_SQUARE, PointSet(0, np.empty((0, 3))), omega=0.01)
    assert prism.d == 0.05
    assert prism.z == 0.0


# --- duplication -------------------------------------------------------------------


def test_kmeans_matches_lloyd_oracle(rng):
    values = np.concatenate([rng.normal(0.0, 0.05, 60), rng.normal(2.0, 0.05, 40)])
    labels, centers = kmeans_1d(values, 2)
    want = oracles.lloyd_kmeans_1d(values, 2)
    assert centers == pytest.approx(want, abs=1e-9)
    assert set(np.unique(labels)) == {0, 1}


def test_duplicates_split_bimodal_depths(rng):
    clip = make_clipart([UNIT_SQUARE])
    xy = rng.uniform(0.1, 0.9, (100, 2))
    z = np.where(rng.random(100) < 0.5, 0.0, 2.0) + rng.normal(0, 0.02, 100)
    ps = PointSet(0, np.column_stack([xy, z]))
    volumes, vol_sets = duplicate_paths(clip, [MultipleObjects(0, 2)], [ps])
    assert volumes == [(0, 0), (0, 1)]
    z0 = vol_sets[0].points[:, 2].mean()
    z1 = vol_sets[1].points[:, 2].mean()
    assert abs(z0 - 0.0) < 0.1 and abs(z1 - 2.0) < 0.1


def test_duplicates_insufficient_points_raise():
    clip = make_clipart([UNIT_SQUARE])
    ps = PointSet(0, np.array([[0.5, 0.5, 0.0]]))
    with pytest.raises(ClusterError):
        duplicate_paths(clip, [MultipleObjects(0, 2)], [ps])


def test_chair_leg_duplication_structure(rng):
    # a single leg footprint standing for two legs at distinct depths
    leg = UNIT_SQUARE * [0.08, 0.4] + [0.2, 0.1]
    clip = make_clipart([leg])
    front = sample_box_surface(rng, 0.2, 0.1, 0.08, 0.4, 0.1, 0.08, 400)
    back = sample_box_surface(rng, 0.2, 0.1, 0.08, 0.4, 0.5, 0.08, 400)
    shape = GuidingShape(np.vstack([front, back]))
    solution = solve(clip, shape, [MultipleObjects(0, 2)], SolveConfig())
    assert len(solution.prisms) == 2
    z_values = sorted(p.z for p in solution.prisms)
    assert abs(z_values[0] - 0.1) < 0.05 and abs(z_values[1] - 0.5) < 0.05
    assert solution.prisms[0].d == solution.prisms[1].d  # shared thickness class


# --- constraint resolution -----------------------------------------------------------


def two_path_setup(rng, z_points=(0.0, 1.0), counts=(80, 10)):
    a = UNIT_SQUARE * 0.3 + [0.05, 0.3]
    b = UNIT_SQUARE * 0.3 + [0.6, 0.3]
    clip = make_clipart([a, b])
    sets = []
    for poly, z, count in zip((a, b), z_points, counts):
        lo, hi = poly.min(0), poly.max(0)
        xy = rng.uniform(lo, hi, (count, 2))
        sets.append(PointSet(len(sets), np.column_stack([xy, np.full(count, z)])))
    return clip, sets


def test_same_depth_moves_toward_better_cover(rng):
    from clipscaffold.extrusion import _with_costs

    clip, sets = two_path_setup(rng)
    cs = compile_constraints(clip, [SameDepth(0, 1)])
    prisms = [
        Prism(0, clip.paths[0].polygon, d=0.2, z=0.0),
        Prism(1, clip.paths[1].polygon, d=0.2, z=1.0),
    ]
    sol = _with_costs(prisms, [(0, 0), (1, 0)], 0.01, sets)
    # oracle: evaluate both shared-z candidates
    cost_at_0 = sum(cover_cost(s, Prism(s.path_id, p.polygon, d=0.2, z=0.0)) for s, p in zip(sets, prisms))
    cost_at_1 = sum(cover_cost(s, Prism(s.path_id, p.polygon, d=0.2, z=1.0)) for s, p in zip(sets, prisms))
    assert cost_at_0 < cost_at_1
    resolved = resolve_constraints(sol, cs, sets)
    assert resolved.prisms[0].z == resolved.prisms[1].z == 0.0


def test_depth_order_identity_when_satisfied(rng):
    from clipscaffold.extrusion import _with_costs

    clip, sets = two_path_setup(rng, z_points=(0.5, 0.0))
    cs = compile_constraints(clip, [DepthOrder(front=0, behind=1)])
    prisms = [
        Prism(0, clip.paths[0].polygon, d=0.2, z=0.5),
        Prism(1, clip.paths[1].polygon, d=0.2, z=0.0),
    ]
    sol = _with_costs(prisms, [(0, 0), (1, 0)], 0.01, sets)
    resolved = resolve_constraints(sol, cs, sets)
    assert resolved.prisms[0].z == 0.5 and resolved.prisms[1].z == 0.0
    assert resolved.total_cost == pytest.approx(sol.total_cost, abs=1e-12)


def test_depth_order_moves_cheaper_endpoint(rng):
    from clipscaffold.extrusion import _with_costs

    # path 0 must be in front but starts behind; moving the sparse volume
    # (path 1, 10 points) is cheaper than moving the dense one
    clip, sets = two_path_setup(rng, z_points=(0.0, 0.3), counts=(300, 10))
    cs = compile_constraints(clip, [DepthOrder(front=0, behind=1)])
    prisms = [
        Prism(0, clip.paths[0].polygon, d=0.4, z=0.0),
        Prism(1, clip.paths[1].polygon, d=0.4, z=0.3),
    ]
    sol = _with_costs(prisms, [(0, 0), (1, 0)], 0.01, sets)
    resolved = resolve_constraints(sol, cs, sets)
    assert resolved.prisms[0].z == 0.0  # dense volume stayed put
    assert resolved.prisms[0].z - resolved.prisms[1].z >= cs.order_margin - 1e-9


def test_same_thickness_already_equal_is_identity(rng):
    from clipscaffold.extrusion import _with_costs

    clip, sets = two_path_setup(rng, z_points=(0.2, 0.2))
    cs = compile_constraints(clip, [SameThickness(0, 1)])
    prisms = [
        Prism(0, clip.paths[0].polygon, d=1.0, z=0.2),
        Prism(1, clip.paths[1].polygon, d=1.0, z=0.2),
    ]
    sol = _with_costs(prisms, [(0, 0), (1, 0)], 0.01, sets)
    resolved = resolve_constraints(sol, cs, sets)
    assert resolved.prisms[0].d == resolved.prisms[1].d == 1.0
    assert resolved.total_cost == pytest.approx(sol.total_cost, abs=1e-12)


def test_resolution_postconditions_on_random_annotation_sets(rng):
    for trial in range(10):
        scene = generate_scene(500 + trial)
        n = len(scene.clipart.paths)
        annotations = []
        ids = list(rng.permutation(n))
        if n >= 2:
            annotations.append(SameThickness(int(ids[0]), int(ids[1])))
        if n >= 4:
            annotations.append(SameDepth(int(ids[2]), int(ids[3])))
            annotations.append(DepthOrder(front=int(ids[0]), behind=int(ids[2])))
        cfg = SolveConfig()
        solution = solve(scene.clipart, scene.shape, annotations, cfg)
        cs = compile_constraints(scene.clipart, annotations, cfg.constraints)
        for cls in cs.depth_classes:
            zs = [solution.prisms[m].z for m in cls]
            assert max(zs) - min(zs) <= 1e-9
        for cls in cs.thickness_classes:
            ds = [solution.prisms[m].d for m in cls]
            assert max(ds) - min(ds) <= 1e-9
        for f, b in cs.order_edges:
            assert solution.prisms[f].z - solution.prisms[b].z >= cs.order_margin - 1e-9


# --- refinement ---------------------------------------------------------------------


def test_refine_fixed_point_near_optimum(rng):
    scene = generate_scene(42)
    cfg = SolveConfig(refine=RefineConfig(enabled=True))
    solution = solve(scene.clipart, scene.shape, [], cfg)
    psets = solution_pointsets(scene.clipart, scene.shape, [], cfg)
    again = refine_local(solution, psets, cfg)
    assert solution.total_cost - again.total_cost < 1e-6


def test_refine_never_increases_cost(rng):
    from clipscaffold.extrusion import _with_costs

    for trial in range(8):
        scene = generate_scene(900 + trial)
        cfg = SolveConfig()
        base = solve(scene.clipart, scene.shape, [], cfg)
        psets = solution_pointsets(scene.clipart, scene.shape, [], cfg)
        # perturb the solved parameters, then refine
        prisms = [
            Prism(p.path_id, p.polygon, d=max(p.d * rng.uniform(0.5, 2.0), 1e-3), z=p.z + rng.normal(0, 0.1))
            for p in base.prisms
        ]
        perturbed = _with_costs(prisms, base.origin, base.omega, psets)
        refined = refine_local(perturbed, psets, cfg)
        assert refined.total_cost <= perturbed.total_cost + 1e-12


def test_refine_keeps_constraint_equalities(rng):
    scene = generate_scene(77)
    annotations = [SameThickness(0, 1)]
    cfg = SolveConfig(refine=RefineConfig(enabled=True))
    solution = solve(scene.clipart, scene.shape, annotations, cfg)
    assert solution.prisms[0].d == solution.prisms[1].d


# --- solve --------------------------------------------------------------------------


def test_solve_recovers_synthetic_scene():
    scene = generate_scene(11)
    cfg = SolveConfig(refine=RefineConfig(enabled=True))
    solution = solve(scene.clipart, scene.shape, [], cfg)
    for prism, (d_true, z_true) in zip(solution.prisms, scene.truth):
        assert abs(prism.d - d_true) / d_true <= 0.10
        assert abs(prism.z - z_true) <= 0.05


def test_constrained_cost_at_least_unconstrained():
    scene = generate_scene(13)
    cfg = SolveConfig(refine=RefineConfig(enabled=True))
    free = solve(scene.clipart, scene.shape, [], cfg)
    tied = solve(scene.clipart, scene.shape, [SameThickness(0, 1), SameDepth(0, 1)], cfg)
    assert tied.prisms[0].d == tied.prisms[1].d
    assert tied.total_cost >= free.total_cost - 1e-9


def test_solve_empty_points_falls_back(rng):
    clip = make_clipart([UNIT_SQUARE * 0.3 + 0.05, UNIT_SQUARE * 0.3 + [0.6, 0.6]])
    pts = np.column_stack([rng.uniform(0.1, 0.3, (50, 2)), rng.normal(0, 0.05, 50)])
    solution = solve(clip, GuidingShape(pts), [], SolveConfig())
    assert solution.prisms[1].d == 0.05
    assert solution.prisms[1].z == 0.0
    assert np.isfinite(solution.total_cost)


def test_solve_is_bit_deterministic():
    scene = generate_scene(21)
    cfg = SolveConfig(refine=RefineConfig(enabled=True))
    a = solve(scene.clipart, scene.shape, [SameThickness(0, 1)], cfg)
    b = solve(scene.clipart, scene.shape, [SameThickness(0, 1)], cfg)
    assert [p.d for p in a.prisms] == [p.d for p in b.prisms]
    assert [p.z for p in a.prisms] == [p.z for p in b.prisms]
    assert a.total_cost == b.total_cost


def test_z_scaling_property():
    scene = generate_scene(31)
    cfg = SolveConfig()  # un-refined, unannotated
    base = solve(scene.clipart, scene.shape, [], cfg)
    factor = 2.5
    scaled_pts = scene.shape.vertices.copy()
    scaled_pts[:, 2] *= factor
    scaled = solve(scene.clipart, GuidingShape(scaled_pts), [], cfg)
    for a, b in zip(base.prisms, scaled.prisms):
        assert b.z == pytest.approx(a.z * factor, abs=1e-6)


def test_cached_costs_match_recomputation():
    scene = generate_scene(51)
    cfg = SolveConfig()
    solution = solve(scene.clipart, scene.shape, [], cfg)
    psets = solution_pointsets(scene.clipart, scene.shape, [], cfg)
    assert solution.total_cost == pytest.approx(total_cost(solution, psets), abs=1e-9)
    assert solution.thickness_cost == pytest.approx(thickness_cost(solution), abs=1e-12)
