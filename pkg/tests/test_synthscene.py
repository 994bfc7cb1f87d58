"""Synthetic scene tests: camera rig, rendering, ground truth, determinism."""

import hashlib

import numpy as np
import pytest

from mvdet.errors import ConfigError
from mvdet.geometry import (
    GroundGrid,
    default_cylinder,
    project_cylinder,
    project_points,
    world_to_image,
)
from mvdet.synthscene import (
    DEFAULT_IMAGE_SIZE,
    LEG_SHADE,
    PersonSpec,
    ScenarioSpec,
    load_scenario,
    make_cameras,
    make_scenario,
    random_trajectories,
    render_frame,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

GRID = GroundGrid(origin=(0.0, 0.0), cell_size=0.5, rows=12, cols=12)


class TestMakeCameras:
    def test_principal_ray_through_grid_center(self):
        (cam,) = make_cameras(1, GRID)
        cx = GRID.origin[0] + GRID.cols * GRID.cell_size / 2
        cy = GRID.origin[1] + GRID.rows * GRID.cell_size / 2
        u, v = world_to_image(cam, (cx, cy, 0.0))
        assert abs(u - cam.image_width / 2) < 1.0
        assert abs(v - cam.image_height / 2) < 1.0

    def test_three_cameras_at_120_degree_yaws(self):
        cams = make_cameras(3, GRID, radius_m=8.0)
        cx = GRID.origin[0] + GRID.cols * GRID.cell_size / 2
        cy = GRID.origin[1] + GRID.rows * GRID.cell_size / 2
        yaws = []
        for cam in cams:
            pos = cam.center()
            yaws.append(np.degrees(np.arctan2(pos[1] - cy, pos[0] - cx)))
        diff = (np.asarray(yaws) - [0.0, 120.0, 240.0] + 180.0) % 360.0 - 180.0
        np.testing.assert_allclose(diff, 0.0, atol=1e-6)

    def test_all_cell_centers_inside_every_image(self):
        for n in (1, 2, 3, 4):
            for cam in make_cameras(n, GRID):
                uv, depth = project_points(cam, GRID.cell_centers())
                assert (depth > 0).all()
                assert (uv[:, 0] >= 0).all() and (uv[:, 0] <= cam.image_width).all()
                assert (uv[:, 1] >= 0).all() and (uv[:, 1] <= cam.image_height).all()

    def test_grid_spans_most_of_image(self):
        (cam,) = make_cameras(1, GRID)
        corners = np.array(
            [
                [0.0, 0.0, 0.0],
                [GRID.cols * GRID.cell_size, 0.0, 0.0],
                [0.0, GRID.rows * GRID.cell_size, 0.0],
                [GRID.cols * GRID.cell_size, GRID.rows * GRID.cell_size, 0.0],
            ]
        )
        uv, _ = project_points(cam, corners)
        span = uv[:, 0].max() - uv[:, 0].min()
        assert span >= 0.8 * cam.image_width


class TestTrajectories:
    def test_no_collisions_and_on_grid(self):
        rng = np.random.default_rng(0)
        tracks = random_trajectories(GRID, 4, 80, rng)
        assert len(tracks) == 4
        for t in range(80):
            cells = [track[t] for track in tracks]
            assert len(set(cells)) == 4
            for c in cells:
                GRID.cell_rowcol(c)

    def test_moves_are_single_steps(self):
        rng = np.random.default_rng(1)
        (track,) = random_trajectories(GRID, 1, 100, rng)
        for a, b in zip(track[:-1], track[1:]):
            ra, ca = GRID.cell_rowcol(a)
            rb, cb = GRID.cell_rowcol(b)
            assert abs(ra - rb) + abs(ca - cb) <= 1


def color_mass(patch, color, tol=0.15):
    d_torso = np.abs(patch - np.asarray(color)).max(axis=2)
    d_legs = np.abs(patch - np.asarray(color) * LEG_SHADE).max(axis=2)
    return ((d_torso < tol) | (d_legs < tol)).mean()


class TestRenderFrame:
    def test_empty_scene(self):
        spec = make_scenario(n_persons=0, n_frames=3, seed=0)
        images, gt = render_frame(spec, 0)
        assert gt == []
        assert len(images) == 3
        for img in images:
            assert img.shape == (DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE, 3)
            assert img.min() >= 0.0 and img.max() <= 1.0

    def test_person_crop_contains_their_color(self):
        from mvdet.geometry import crop_region

        spec = make_scenario(n_persons=1, n_frames=4, seed=2, noise_sigma=0.02)
        person = spec.persons[0]
        for t in range(4):
            images, gt = render_frame(spec, t)
            cell = person.trajectory[t]
            cx, cy, _ = spec.grid.cell_center(cell)
            for cam, img in zip(spec.cameras, images):
                rect = project_cylinder(cam, person.size.at(cx, cy))
                if not rect.visible:
                    continue
                patch = crop_region(img, rect, 32, 32)
                assert color_mass(patch, person.color) >= 0.30

    def test_adjacent_persons_occlude_in_some_view(self):
        # place two persons in adjacent cells explicitly
        grid = GRID
        cams = tuple(make_cameras(3, grid))
        cell_a = grid.cell_index(6, 6)
        cell_b = grid.cell_index(6, 7)
        persons = tuple(
            PersonSpec(
                person_id=i,
                trajectory=(cell,),
                color=(1.0, 0.0, 0.0) if i == 0 else (0.0, 0.0, 1.0),
                size=default_cylinder(),
            )
            for i, cell in enumerate((cell_a, cell_b))
        )
        spec = ScenarioSpec(grid=grid, cameras=cams, persons=persons, n_frames=1, seed=0)
        overlap = 0
        for cam in cams:
            ra = project_cylinder(cam, persons[0].size.at(*grid.cell_center(cell_a)[:2]))
            rb = project_cylinder(cam, persons[1].size.at(*grid.cell_center(cell_b)[:2]))
            if ra.visible and rb.visible:
                from mvdet.nms import iou

                if iou((ra.x0, ra.y0, ra.x1, ra.y1), (rb.x0, rb.y0, rb.x1, rb.y1)) > 0:
                    overlap += 1
        assert overlap >= 1

    def test_bit_deterministic(self):
        spec = make_scenario(n_persons=2, n_frames=2, seed=5)
        a, gta = render_frame(spec, 1)
        b, gtb = render_frame(spec, 1)
        assert gta == gtb
        for x, y in zip(a, b):
            assert hashlib.sha256(x.tobytes()).hexdigest() == hashlib.sha256(y.tobytes()).hexdigest()

    def test_silhouette_centroid_inside_projected_bbox(self):
        spec = make_scenario(n_persons=1, n_frames=1, seed=7, noise_sigma=0.0)
        person = spec.persons[0]
        images, _ = render_frame(spec, 0)
        cell = person.trajectory[0]
        cx, cy, _ = spec.grid.cell_center(cell)
        for cam, img in zip(spec.cameras, images):
            rect = project_cylinder(cam, person.size.at(cx, cy))
            if not rect.visible:
                continue
            d_torso = np.abs(img - np.asarray(person.color)).max(axis=2)
            d_legs = np.abs(img - np.asarray(person.color) * LEG_SHADE).max(axis=2)
            mask = (d_torso < 0.05) | (d_legs < 0.05)
            assert mask.any()
            rows, cols = np.nonzero(mask)
            r, c = rows.mean(), cols.mean()
            assert rect.x0 - 1 <= c <= rect.x1 + 1
            assert rect.y0 - 1 <= r <= rect.y1 + 1

    def test_occlusion_rate_increases_with_crowding(self):
        def overlap_rate(n_persons, seed=11):
            spec = make_scenario(
                grid_rows=8, grid_cols=8, n_persons=n_persons, n_frames=30, seed=seed
            )
            overlapping = 0
            total = 0
            from mvdet.nms import iou

            for t in range(spec.n_frames):
                cells = [p.trajectory[t] for p in spec.persons]
                for cam in spec.cameras:
                    rects = [
                        project_cylinder(cam, p.size.at(*spec.grid.cell_center(c)[:2]))
                        for p, c in zip(spec.persons, cells)
                    ]
                    total += 1
                    hit = False
                    for i in range(len(rects)):
                        for j in range(i + 1, len(rects)):
                            if rects[i].visible and rects[j].visible:
                                a, b = rects[i], rects[j]
                                if iou((a.x0, a.y0, a.x1, a.y1), (b.x0, b.y0, b.x1, b.y1)) > 0.05:
                                    hit = True
                    overlapping += hit
            return overlapping / total

        assert overlap_rate(2) < overlap_rate(6)

    def test_frame_out_of_range(self):
        spec = make_scenario(n_persons=1, n_frames=2, seed=0)
        with pytest.raises(ConfigError):
            render_frame(spec, 2)


class TestScenarioSpec:
    def test_round_trip_json(self, tmp_path):
        spec = make_scenario(n_persons=2, n_frames=6, seed=9)
        path = tmp_path / "scenario.json"
        save_scenario(path, spec)
        loaded = load_scenario(path)
        assert loaded.n_frames == spec.n_frames
        assert loaded.seed == spec.seed
        assert len(loaded.persons) == 2
        assert loaded.persons[0].trajectory == spec.persons[0].trajectory
        np.testing.assert_allclose(loaded.cameras[0].P, spec.cameras[0].P)
        a, _ = render_frame(spec, 3)
        b, _ = render_frame(loaded, 3)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_trajectory_length_validated(self):
        spec = make_scenario(n_persons=1, n_frames=4, seed=0)
        bad = scenario_to_dict(spec)
        bad["persons"][0]["trajectory"] = [0, 1]
        with pytest.raises(ConfigError):
            scenario_from_dict(bad)

    def test_occupancy_ground_truth(self):
        spec = make_scenario(n_persons=3, n_frames=5, seed=3)
        for t in range(5):
            occ = spec.occupied_cells(t)
            assert occ == sorted(p.trajectory[t] for p in spec.persons)
            assert len(spec.persons_at(t)) == 3

    def test_default_scenario_positive_count_from_trajectories(self):
        # counting oracle: positives = one per person per frame
        spec = make_scenario(n_persons=3, n_frames=250, seed=0)
        total = sum(len(spec.occupied_cells(t)) for t in range(250))
        assert total == 750 >= 500
