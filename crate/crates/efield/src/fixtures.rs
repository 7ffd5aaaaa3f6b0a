//! Reference geometries and ready-made problem setups shared by unit tests,
//! the acceptance suite, and examples.
//!
//! All generators honor the mesh conventions: element nodes are stored in the
//! canonical Lagrange lattice layout, and a region's meshes are oriented (via
//! `normal_sign` where needed) so the parametric normal points from the
//! region's away domain into its toward domain.

use nalgebra::{Point3, Vector3};

use crate::mesh::{
    build_skeleton, detect_interfaces, validate_closed_domains, DomainClass, DomainSpec,
    ElementShape, InterfaceSet, JoinTolerances, MeshElement, MeshSet, RegionSpec, Skeleton,
    SurfaceMesh,
};

/// A complete discretized problem: meshes, skeleton, detected interfaces.
#[derive(Debug, Clone)]
pub struct ProblemFixture {
    pub meshes: MeshSet,
    pub skeleton: Skeleton,
    pub interfaces: InterfaceSet,
}

fn assemble_fixture(
    meshes: Vec<SurfaceMesh>,
    domains: Vec<DomainSpec>,
    regions: Vec<RegionSpec>,
) -> ProblemFixture {
    let meshes = MeshSet::new(meshes);
    let tol = JoinTolerances::from_bbox_diagonal(meshes.bbox_diagonal());
    let interfaces = detect_interfaces(&meshes, tol).expect("fixture interfaces");
    let skeleton = build_skeleton(&domains, &regions).expect("fixture skeleton");
    skeleton.validate_consistency().expect("fixture skeleton consistency");
    validate_closed_domains(&skeleton, &meshes, &interfaces).expect("fixture closure");
    ProblemFixture {
        meshes,
        skeleton,
        interfaces,
    }
}

/// Key for exact node identification on the cube: face-lattice coordinates
/// are identical f64 computations on both faces sharing an edge, so a snapped
/// integer key merges seam nodes without a search structure.
fn quantize(p: &Point3<f64>) -> (i64, i64, i64) {
    let q = |c: f64| (c * 1e12).round() as i64;
    (q(p.x), q(p.y), q(p.z))
}

/// Structured quad mesh of the full sphere of radius `radius`: the cube
/// [-1,1]^3 is meshed with `n` x `n` elements of geometric order `order` per
/// face and every lattice node is projected radially. The mesh is conforming
/// across face seams (6 n^2 elements, 6 (n order)^2 + 2 nodes) and oriented
/// outward.
pub fn cube_sphere_mesh(n: usize, order: usize, radius: f64, region: usize) -> SurfaceMesh {
    assert!(n >= 1 && order >= 1);
    let m = n * order;
    // (a, b) in [0,1]^2 -> cube point, chosen per face so du x dv is outward.
    let faces: [fn(f64, f64) -> Point3<f64>; 6] = [
        |a, b| Point3::new(1.0, -1.0 + 2.0 * a, -1.0 + 2.0 * b),
        |a, b| Point3::new(-1.0, -1.0 + 2.0 * b, -1.0 + 2.0 * a),
        |a, b| Point3::new(-1.0 + 2.0 * b, 1.0, -1.0 + 2.0 * a),
        |a, b| Point3::new(-1.0 + 2.0 * a, -1.0, -1.0 + 2.0 * b),
        |a, b| Point3::new(-1.0 + 2.0 * a, -1.0 + 2.0 * b, 1.0),
        |a, b| Point3::new(-1.0 + 2.0 * b, -1.0 + 2.0 * a, -1.0),
    ];

    let mut nodes: Vec<Point3<f64>> = Vec::new();
    let mut index: std::collections::HashMap<(i64, i64, i64), usize> =
        std::collections::HashMap::new();
    let mut elements = Vec::with_capacity(6 * n * n);

    for face in &faces {
        // Global ids of this face's (m+1)^2 lattice, b-major like the lattice.
        let mut grid = Vec::with_capacity((m + 1) * (m + 1));
        for j in 0..=m {
            for i in 0..=m {
                let p = face(i as f64 / m as f64, j as f64 / m as f64);
                let id = *index.entry(quantize(&p)).or_insert_with(|| {
                    nodes.push(p);
                    nodes.len() - 1
                });
                grid.push(id);
            }
        }
        for eb in 0..n {
            for ea in 0..n {
                let mut elem_nodes = Vec::with_capacity((order + 1) * (order + 1));
                for jj in 0..=order {
                    for ii in 0..=order {
                        elem_nodes.push(grid[(eb * order + jj) * (m + 1) + (ea * order + ii)]);
                    }
                }
                elements.push(MeshElement {
                    shape: ElementShape::Quad,
                    order,
                    nodes: elem_nodes,
                    patch: None,
                    region,
                });
            }
        }
    }

    for p in &mut nodes {
        let r = p.coords.norm();
        p.coords *= radius / r;
    }
    SurfaceMesh::new(nodes, elements).expect("cube-sphere mesh")
}

/// Splits a cube-projected sphere into two conforming half meshes (three
/// cube faces each) with independent node arrays; the seam nodes are
/// bit-identical duplicates, so interface detection joins the halves.
pub fn split_cube_sphere(
    n: usize,
    order: usize,
    radius: f64,
    region_a: usize,
    region_b: usize,
) -> (SurfaceMesh, SurfaceMesh) {
    let full = cube_sphere_mesh(n, order, radius, region_a);
    let per_face = n * n;
    let extract = |faces: [usize; 3], region: usize| {
        let mut remap: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        let mut nodes = Vec::new();
        let mut elements = Vec::new();
        for &f in &faces {
            for e in f * per_face..(f + 1) * per_face {
                let old = &full.elements[e];
                let mapped = old
                    .nodes
                    .iter()
                    .map(|&id| {
                        *remap.entry(id).or_insert_with(|| {
                            nodes.push(full.nodes[id]);
                            nodes.len() - 1
                        })
                    })
                    .collect();
                elements.push(MeshElement {
                    shape: old.shape,
                    order: old.order,
                    nodes: mapped,
                    patch: old.patch,
                    region,
                });
            }
        }
        SurfaceMesh::new(nodes, elements).expect("half sphere mesh")
    };
    (extract([0, 2, 4], region_a), extract([1, 3, 5], region_b))
}

/// Rigid translation of every node.
pub fn translate_mesh(mut mesh: SurfaceMesh, offset: Vector3<f64>) -> SurfaceMesh {
    for p in &mut mesh.nodes {
        *p += offset;
    }
    mesh
}

/// Structured quad mesh of the parallelogram `origin + a*side_a + b*side_b`,
/// `a, b` in [0,1], with `na` x `nb` elements of order `order`. The
/// parametric normal points along `side_a x side_b`.
pub fn plate_mesh(
    origin: Point3<f64>,
    side_a: Vector3<f64>,
    side_b: Vector3<f64>,
    na: usize,
    nb: usize,
    order: usize,
    region: usize,
) -> SurfaceMesh {
    assert!(na >= 1 && nb >= 1 && order >= 1);
    let (ma, mb) = (na * order, nb * order);
    let mut nodes = Vec::with_capacity((ma + 1) * (mb + 1));
    for j in 0..=mb {
        for i in 0..=ma {
            nodes.push(origin + side_a * (i as f64 / ma as f64) + side_b * (j as f64 / mb as f64));
        }
    }
    let mut elements = Vec::with_capacity(na * nb);
    for eb in 0..nb {
        for ea in 0..na {
            let mut elem_nodes = Vec::with_capacity((order + 1) * (order + 1));
            for jj in 0..=order {
                for ii in 0..=order {
                    elem_nodes.push((eb * order + jj) * (ma + 1) + (ea * order + ii));
                }
            }
            elements.push(MeshElement {
                shape: ElementShape::Quad,
                order,
                nodes: elem_nodes,
                patch: None,
                region,
            });
        }
    }
    SurfaceMesh::new(nodes, elements).expect("plate mesh")
}

/// Flat-quad torus mesh (`nu` x `nv` elements around the major and minor
/// circles), oriented outward. Used for octree construction tests.
pub fn torus_mesh(major: f64, minor: f64, nu: usize, nv: usize, region: usize) -> SurfaceMesh {
    assert!(nu >= 3 && nv >= 3);
    let mut nodes = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let th = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
            let ph = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let ring = major + minor * ph.cos();
            nodes.push(Point3::new(
                ring * th.cos(),
                ring * th.sin(),
                minor * ph.sin(),
            ));
        }
    }
    let at = |i: usize, j: usize| (j % nv) * nu + (i % nu);
    let mut elements = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            elements.push(MeshElement {
                shape: ElementShape::Quad,
                order: 1,
                nodes: vec![at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)],
                patch: None,
                region,
            });
        }
    }
    SurfaceMesh::new(nodes, elements).expect("torus mesh")
}

/// One conducting sphere (radius 1) held at `voltage` in unbounded air.
/// Analytic solution: density sigma = voltage, total charge 4 pi eps0 voltage.
pub fn sphere_electrode(n: usize, order: usize, voltage: f64) -> ProblemFixture {
    let mesh = cube_sphere_mesh(n, order, 1.0, 1);
    assemble_fixture(
        vec![mesh],
        vec![
            DomainSpec { id: 0, class: DomainClass::Air },
            DomainSpec { id: 1, class: DomainClass::Electrode { voltage } },
        ],
        vec![RegionSpec {
            id: 1,
            sides: (1, 0),
            screen_conductor: None,
            meshes: vec![0],
        }],
    )
}

/// Spherical capacitor: electrode radius 1 at `v_inner`, grounded enclosure
/// radius 2 at `v_outer` (its mesh faces the gap). Analytic capacitance
/// 4 pi eps0 / (1/1 - 1/2) = 8 pi eps0.
pub fn concentric_spheres(
    n_inner: usize,
    n_outer: usize,
    order: usize,
    v_inner: f64,
    v_outer: f64,
) -> ProblemFixture {
    let inner = cube_sphere_mesh(n_inner, order, 1.0, 1);
    let mut outer = cube_sphere_mesh(n_outer, order, 2.0, 2);
    outer.normal_sign = -1.0;
    assemble_fixture(
        vec![inner, outer],
        vec![
            DomainSpec { id: 0, class: DomainClass::Air },
            DomainSpec { id: 1, class: DomainClass::Electrode { voltage: v_inner } },
            DomainSpec { id: 2, class: DomainClass::Electrode { voltage: v_outer } },
        ],
        vec![
            RegionSpec { id: 1, sides: (1, 0), screen_conductor: None, meshes: vec![0] },
            RegionSpec { id: 2, sides: (2, 0), screen_conductor: None, meshes: vec![1] },
        ],
    )
}

/// Driven sphere (radius 1, 1 volt) inside a floating conducting shell
/// (screen at radius 2, zero net charge) inside a grounded enclosure
/// (radius 4). Analytic floating potential: u(r) = (4/3)/r - 1/3, so
/// alpha = u(2) = 1/3.
pub fn floating_shell(n: usize, order: usize) -> ProblemFixture {
    let driven = cube_sphere_mesh(n, order, 1.0, 1);
    let shell = cube_sphere_mesh(n, order, 2.0, 2);
    let mut enclosure = cube_sphere_mesh(n, order, 4.0, 3);
    enclosure.normal_sign = -1.0;
    assemble_fixture(
        vec![driven, shell, enclosure],
        vec![
            DomainSpec { id: 0, class: DomainClass::Air },
            DomainSpec { id: 1, class: DomainClass::Electrode { voltage: 1.0 } },
            DomainSpec { id: 2, class: DomainClass::Floating { charge: 0.0 } },
            DomainSpec { id: 3, class: DomainClass::Electrode { voltage: 0.0 } },
        ],
        vec![
            RegionSpec { id: 1, sides: (1, 0), screen_conductor: None, meshes: vec![0] },
            RegionSpec { id: 2, sides: (0, 0), screen_conductor: Some(2), meshes: vec![1] },
            RegionSpec { id: 3, sides: (3, 0), screen_conductor: None, meshes: vec![2] },
        ],
    )
}

/// Dielectric sphere (radius 1, permittivity `eps_r`) centered between two
/// square electrode screens at z = +/- `half_gap`, spanning
/// [-half_width, half_width]^2, at `v_top` / `v_bottom`. For half_width >>
/// half_gap >> 1 the plates produce a nearly uniform field over the sphere
/// and the interior field approaches 3/(eps_r + 2) of the empty-gap field.
pub fn dielectric_sphere_in_plates(
    n_sphere: usize,
    n_plate: usize,
    order: usize,
    eps_r: f64,
    half_gap: f64,
    half_width: f64,
    v_top: f64,
    v_bottom: f64,
) -> ProblemFixture {
    let sphere = cube_sphere_mesh(n_sphere, order, 1.0, 3);
    let w = 2.0 * half_width;
    let top = plate_mesh(
        Point3::new(-half_width, -half_width, half_gap),
        Vector3::new(w, 0.0, 0.0),
        Vector3::new(0.0, w, 0.0),
        n_plate,
        n_plate,
        order,
        1,
    );
    let bottom = plate_mesh(
        Point3::new(-half_width, -half_width, -half_gap),
        Vector3::new(w, 0.0, 0.0),
        Vector3::new(0.0, w, 0.0),
        n_plate,
        n_plate,
        order,
        2,
    );
    assemble_fixture(
        vec![sphere, top, bottom],
        vec![
            DomainSpec { id: 0, class: DomainClass::Air },
            DomainSpec { id: 1, class: DomainClass::Electrode { voltage: v_top } },
            DomainSpec { id: 2, class: DomainClass::Electrode { voltage: v_bottom } },
            DomainSpec { id: 3, class: DomainClass::Dielectric { eps_r } },
        ],
        vec![
            RegionSpec { id: 1, sides: (0, 0), screen_conductor: Some(1), meshes: vec![1] },
            RegionSpec { id: 2, sides: (0, 0), screen_conductor: Some(2), meshes: vec![2] },
            RegionSpec { id: 3, sides: (3, 0), screen_conductor: None, meshes: vec![0] },
        ],
    )
}

/// Parallel-plate capacitor built from the same plate pair without the
/// sphere; used as the reference field for the dielectric-sphere case.
pub fn empty_plates(
    n_plate: usize,
    order: usize,
    half_gap: f64,
    half_width: f64,
    v_top: f64,
    v_bottom: f64,
) -> ProblemFixture {
    let w = 2.0 * half_width;
    let top = plate_mesh(
        Point3::new(-half_width, -half_width, half_gap),
        Vector3::new(w, 0.0, 0.0),
        Vector3::new(0.0, w, 0.0),
        n_plate,
        n_plate,
        order,
        1,
    );
    let bottom = plate_mesh(
        Point3::new(-half_width, -half_width, -half_gap),
        Vector3::new(w, 0.0, 0.0),
        Vector3::new(0.0, w, 0.0),
        n_plate,
        n_plate,
        order,
        2,
    );
    assemble_fixture(
        vec![top, bottom],
        vec![
            DomainSpec { id: 0, class: DomainClass::Air },
            DomainSpec { id: 1, class: DomainClass::Electrode { voltage: v_top } },
            DomainSpec { id: 2, class: DomainClass::Electrode { voltage: v_bottom } },
        ],
        vec![
            RegionSpec { id: 1, sides: (0, 0), screen_conductor: Some(1), meshes: vec![0] },
            RegionSpec { id: 2, sides: (0, 0), screen_conductor: Some(2), meshes: vec![1] },
        ],
    )
}

/// A closed dielectric sphere in air with nothing driving it; the assembled
/// system has only transmission rows and is rejected as ill-posed.
pub fn lone_dielectric(n: usize, order: usize, eps_r: f64) -> ProblemFixture {
    let mesh = cube_sphere_mesh(n, order, 1.0, 1);
    assemble_fixture(
        vec![mesh],
        vec![
            DomainSpec { id: 0, class: DomainClass::Air },
            DomainSpec { id: 1, class: DomainClass::Dielectric { eps_r } },
        ],
        vec![RegionSpec {
            id: 1,
            sides: (1, 0),
            screen_conductor: None,
            meshes: vec![0],
        }],
    )
}

/// A single floating conducting sphere with prescribed total charge.
pub fn floating_sphere(n: usize, order: usize, charge: f64) -> ProblemFixture {
    let mesh = cube_sphere_mesh(n, order, 1.0, 1);
    assemble_fixture(
        vec![mesh],
        vec![
            DomainSpec { id: 0, class: DomainClass::Air },
            DomainSpec { id: 1, class: DomainClass::Floating { charge } },
        ],
        vec![RegionSpec {
            id: 1,
            sides: (1, 0),
            screen_conductor: None,
            meshes: vec![0],
        }],
    )
}

/// Every region class at once: a dielectric ball (radius 4, two half
/// meshes), two electrode spheres and one floating sphere buried inside it.
/// Unknowns split into two transmission regions (D), two electrode regions
/// (E), one floating region (F), and one floating potential.
pub fn constellation(n: usize, order: usize, eps_r: f64) -> ProblemFixture {
    let (half_a, half_b) = split_cube_sphere(n, order, 4.0, 3, 4);
    let mut anode = translate_mesh(cube_sphere_mesh(n, order, 1.0, 1), Vector3::new(-2.0, 0.0, 0.0));
    let mut cathode = translate_mesh(cube_sphere_mesh(n, order, 1.0, 2), Vector3::new(2.0, 0.0, 0.0));
    // Normals must point out of the dielectric into the electrodes.
    anode.normal_sign = -1.0;
    cathode.normal_sign = -1.0;
    let floater = translate_mesh(cube_sphere_mesh(n, order, 1.0, 5), Vector3::new(0.0, 2.0, 0.0));
    assemble_fixture(
        vec![half_a, half_b, anode, cathode, floater],
        vec![
            DomainSpec { id: 0, class: DomainClass::Air },
            DomainSpec { id: 1, class: DomainClass::Electrode { voltage: 1.0 } },
            DomainSpec { id: 2, class: DomainClass::Electrode { voltage: -1.0 } },
            DomainSpec { id: 3, class: DomainClass::Dielectric { eps_r } },
            DomainSpec { id: 4, class: DomainClass::Floating { charge: 0.0 } },
        ],
        vec![
            RegionSpec { id: 1, sides: (3, 1), screen_conductor: None, meshes: vec![2] },
            RegionSpec { id: 2, sides: (3, 2), screen_conductor: None, meshes: vec![3] },
            RegionSpec { id: 3, sides: (0, 3), screen_conductor: None, meshes: vec![0] },
            RegionSpec { id: 4, sides: (0, 3), screen_conductor: None, meshes: vec![1] },
            RegionSpec { id: 5, sides: (4, 3), screen_conductor: None, meshes: vec![4] },
        ],
    )
}

/// A unit square screen electrode at 1 volt meshed as two abutting patches,
/// `n_left` x `n_left` elements on [0, 1/2] and `n_right` x `n_right` on
/// [1/2, 1]. Equal counts give a conforming seam; a 1:2 ratio makes every
/// seam edge a hanging refinement.
pub fn two_patch_square(n_left: usize, n_right: usize, order: usize) -> ProblemFixture {
    let left = plate_mesh(
        Point3::new(0.0, 0.0, 0.0),
        Vector3::new(0.5, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        n_left.div_ceil(2),
        n_left,
        order,
        1,
    );
    let right = plate_mesh(
        Point3::new(0.5, 0.0, 0.0),
        Vector3::new(0.5, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        n_right.div_ceil(2),
        n_right,
        order,
        1,
    );
    assemble_fixture(
        vec![left, right],
        vec![
            DomainSpec { id: 0, class: DomainClass::Air },
            DomainSpec { id: 1, class: DomainClass::Electrode { voltage: 1.0 } },
        ],
        vec![RegionSpec {
            id: 1,
            sides: (0, 0),
            screen_conductor: Some(1),
            meshes: vec![0, 1],
        }],
    )
}
