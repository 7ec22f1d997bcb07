mod common;

use printmesh::mesh::{facet_normal, Facet};
use printmesh::stl::{
    header_from_name, read_ascii, read_binary, to_f32_precision, write_ascii, write_binary,
};
use printmesh::{tessellate_heightfield, validate_watertight, HeightField, TriangleMesh, Vec3};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn any_coord() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3f64..1e3,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(1e-300),
    ]
}

fn any_vec3() -> impl Strategy<Value = Vec3> {
    (any_coord(), any_coord(), any_coord()).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn any_mesh() -> impl Strategy<Value = TriangleMesh> {
    let facet = (any_vec3(), any_vec3(), any_vec3(), any_vec3()).prop_map(|(n, a, b, c)| Facet {
        normal: n,
        vertices: [a, b, c],
    });
    ("[A-Za-z0-9_]{1,12}", prop::collection::vec(facet, 0..20))
        .prop_map(|(name, facets)| TriangleMesh::new(name, facets))
}

fn bits(m: &TriangleMesh) -> Vec<u64> {
    m.facets
        .iter()
        .flat_map(|f| std::iter::once(f.normal).chain(f.vertices))
        .flat_map(|v| [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tessellation_is_watertight(seed in any::<u64>()) {
        let h = common::random_padded_field(&mut StdRng::seed_from_u64(seed));
        let m = tessellate_heightfield(&h).unwrap();
        let report = validate_watertight(&m);
        prop_assert!(report.is_clean(), "{report:?}");
        prop_assert!(m.signed_volume() > 0.0);
        for f in &m.facets {
            let n = facet_normal(f.vertices[0], f.vertices[1], f.vertices[2]).unwrap();
            prop_assert!((n - f.normal).norm() < 1e-9);
        }
    }

    #[test]
    fn flat_field_volume(rows in 2usize..12, cols in 2usize..12, s in 0.1f64..5.0, h in 0.2f64..40.0) {
        let field = HeightField::new(rows, cols, s, vec![h; rows * cols], 0.0).unwrap();
        let m = tessellate_heightfield(&field).unwrap();
        let expected = (rows - 1) as f64 * s * (cols - 1) as f64 * s * h;
        prop_assert!((m.signed_volume() - expected).abs() <= 1e-9 * expected.max(1.0));
    }

    #[test]
    fn ascii_round_trip_is_exact(m in any_mesh()) {
        let text = write_ascii(&m, &m.name);
        let back = read_ascii(&text).unwrap();
        prop_assert_eq!(&back.name, &m.name);
        prop_assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn binary_round_trip_at_single_precision(m in any_mesh()) {
        let m = TriangleMesh::new(m.name.clone(), m.facets.into_iter().filter(|f| {
            std::iter::once(f.normal).chain(f.vertices).all(|v| [v.x, v.y, v.z].iter().all(|c| c.abs() < 1e30))
        }).collect());
        let bytes = write_binary(&m, &header_from_name(&m.name)).unwrap();
        prop_assert_eq!(bytes.len(), 84 + 50 * m.len());
        let (back, _) = read_binary(&bytes).unwrap();
        prop_assert_eq!(bits(&back), bits(&to_f32_precision(&m)));
    }
}
