use proptest::prelude::*;

use limitfrac::mesh::QuadMesh;

/// Largest level difference between cells sharing part of an edge.
fn worst_level_jump(mesh: &QuadMesh) -> u32 {
    let cells = mesh.cells();
    let mut worst = 0;
    for a in cells {
        for b in cells {
            let (ax0, ay0, ax1, ay1) = (a.origin[0], a.origin[1], a.origin[0] + a.size[0], a.origin[1] + a.size[1]);
            let (bx0, by0, bx1, by1) = (b.origin[0], b.origin[1], b.origin[0] + b.size[0], b.origin[1] + b.size[1]);
            let vertical = (ax1 == bx0 || bx1 == ax0) && ay0.max(by0) < ay1.min(by1);
            let horizontal = (ay1 == by0 || by1 == ay0) && ax0.max(bx0) < ax1.min(bx1);
            if vertical || horizontal {
                worst = worst.max(a.key.level.abs_diff(b.key.level));
            }
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_stays_balanced_and_covers_the_square(
        x in 0.0..1.0f64, y in 0.0..1.0f64, r in 0.01..0.3f64, levels in 1u32..4,
    ) {
        let mesh = QuadMesh::unit_square()
            .refine_global(2)
            .refine_where(|c| (c.centroid[0] - x).hypot(c.centroid[1] - y) < r, levels);
        prop_assert!(worst_level_jump(&mesh) <= 1);
        prop_assert!((mesh.total_area() - 1.0).abs() < 1e-12);
        for (&v, &[a, b]) in mesh.constraints() {
            let (p, pa, pb) = (mesh.vertices()[v], mesh.vertices()[a], mesh.vertices()[b]);
            prop_assert_eq!(p, [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
        }
    }
}

#[test]
fn global_refinement_halves_the_mesh_size() {
    for k in 0..6 {
        let mesh = QuadMesh::unit_square().refine_global(k);
        assert_eq!(mesh.n_cells(), 4usize.pow(k));
        assert_eq!(mesh.n_vertices(), (2usize.pow(k) + 1).pow(2));
        assert_eq!(mesh.h_min(), 1.0 / 2f64.powi(k as i32));
    }
}
