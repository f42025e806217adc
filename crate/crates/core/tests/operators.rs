use mcldg::benchmarks::channel_mesh;
use mcldg::bernstein::ReferenceElement;
use mcldg::mesh::{ElementKind, Mesh, QuadBoundarySpec};
use mcldg::verify::dense_preconditioned_gradient;
use proptest::prelude::*;

const KINDS: [ElementKind; 3] = [ElementKind::Line, ElementKind::Quadrilateral, ElementKind::Triangle];

fn reference_point(kind: ElementKind, a: f64, b: f64) -> [f64; 2] {
    match kind {
        ElementKind::Line => [a, 0.0],
        ElementKind::Quadrilateral => [a, b],
        ElementKind::Triangle if a + b > 1.0 => [1.0 - a, 1.0 - b],
        ElementKind::Triangle => [a, b],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn basis_sums_to_one(kind in 0..3usize, p in 1..=6usize, a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let r = ReferenceElement::new(KINDS[kind], p).unwrap();
        let mut v = vec![0.0; r.num_nodes];
        r.eval_all(reference_point(KINDS[kind], a, b), &mut v, None);
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(v.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn polynomial_stays_in_coefficient_hull(
        kind in 0..3usize,
        p in 1..=4usize,
        a in 0.0..=1.0f64,
        b in 0.0..=1.0f64,
        coefficients in prop::collection::vec(-10.0..10.0f64, 25),
    ) {
        let r = ReferenceElement::new(KINDS[kind], p).unwrap();
        let u = &coefficients[..r.num_nodes];
        let mut v = vec![0.0; r.num_nodes];
        r.eval_all(reference_point(KINDS[kind], a, b), &mut v, None);
        let value: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(value >= lo - 1e-12 && value <= hi + 1e-12);
    }
}

#[test]
fn lumped_mass_is_row_sum_of_consistent_mass() {
    for kind in KINDS {
        for p in 1..=5 {
            let r = ReferenceElement::new(kind, p).unwrap();
            let mass = r.mass_matrix();
            // equal Bernstein lumped masses: |K| / N
            let lumped = r.measure() / r.num_nodes as f64;
            for i in 0..r.num_nodes {
                assert!((mass.row(i).sum() - lumped).abs() <= 1e-12 * lumped, "{kind:?} p={p} i={i}");
            }
        }
    }
}

#[test]
fn preconditioned_gradient_matches_dense_oracle() {
    for kind in KINDS {
        for p in 1..=3 {
            let r = ReferenceElement::new(kind, p).unwrap();
            let dense = dense_preconditioned_gradient(&r).unwrap();
            for (k, d) in dense.iter().enumerate().take(r.dim()) {
                let sparse = r.gradient.to_dense(k);
                let defect = (&sparse - d).amax();
                assert!(defect <= 1e-8, "{kind:?} p={p} k={k}: {defect:e}");
                for i in 0..r.num_nodes {
                    assert!(sparse.row(i).sum().abs() <= 1e-12, "{kind:?} p={p} row {i}");
                }
            }
        }
    }
}

#[test]
fn box_gradient_has_cartesian_cross_sparsity() {
    for p in 1..=6 {
        let r = ReferenceElement::new(ElementKind::Quadrilateral, p).unwrap();
        for &(i, j, v) in &r.gradient.entries {
            let (ix, iy) = (i % (p + 1), i / (p + 1));
            let (jx, jy) = (j % (p + 1), j / (p + 1));
            let on_cross = (iy == jy && ix.abs_diff(jx) <= 1) || (ix == jx && iy.abs_diff(jy) <= 1);
            assert!(on_cross || v == [0.0, 0.0], "p={p}: entry ({i},{j}) = {v:?}");
            // each direction only couples along its own axis
            if ix != jx {
                assert_eq!(v[1], 0.0);
            }
            if iy != jy {
                assert_eq!(v[0], 0.0);
            }
        }
    }
}

#[test]
fn simplex_gradient_stays_on_neighbor_stencil() {
    for p in 1..=5 {
        let r = ReferenceElement::new(ElementKind::Triangle, p).unwrap();
        for &(i, j, v) in &r.gradient.entries {
            if i == j || v == [0.0, 0.0] {
                continue;
            }
            let (a, b) = (r.multi_indices[i], r.multi_indices[j]);
            let distance: usize = (0..3).map(|c| a[c].abs_diff(b[c])).sum();
            assert_eq!(distance, 2, "p={p}: entry ({i},{j})");
            assert!(r.stencils[i].contains(&j));
        }
    }
}

fn check_faces(mesh: &Mesh) {
    for e in 0..mesh.num_elements() {
        let mut closure = [0.0; 2];
        for (k, link) in mesh.links(e).iter().enumerate() {
            closure[0] += link.measure * link.normal[0];
            closure[1] += link.measure * link.normal[1];
            if let Some(nb) = link.neighbor {
                let back = mesh.links(nb.element)[nb.local_face];
                let partner = back.neighbor.expect("pairing is symmetric");
                assert_eq!((partner.element, partner.local_face), (e, k));
                assert!((back.normal[0] + link.normal[0]).abs() <= 1e-12);
                assert!((back.normal[1] + link.normal[1]).abs() <= 1e-12);
            }
        }
        assert!(closure[0].abs() <= 1e-12 && closure[1].abs() <= 1e-12, "element {e}: {closure:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn structured_meshes_close_and_pair(nx in 1..8usize, ny in 1..8usize, w in 0.1..5.0f64, periodic in any::<bool>()) {
        let spec = if periodic { QuadBoundarySpec::periodic() } else { QuadBoundarySpec::uniform(mcldg::mesh::BoundaryTag::Wall) };
        check_faces(&Mesh::structured_quad(nx, ny, [[0.0, w], [-1.0, 1.0]], &spec).unwrap());
        check_faces(&Mesh::structured_line(nx, [0.0, w], periodic).unwrap());
    }
}

#[test]
fn channel_mesh_faces_close_and_pair() {
    for layers in [2, 4, 8] {
        check_faces(&channel_mesh(layers).unwrap());
    }
}
