use nvelectro::field::*;
use proptest::prelude::*;

fn capacitor(v: f64, d: f64) -> ElectrodeGeometry2D {
    let plate = |z0: f64, potential| Conductor {
        x0: -6.0,
        x1: 6.0,
        z0,
        z1: z0 + 0.1,
        potential,
    };
    ElectrodeGeometry2D {
        conductors: vec![plate(-0.1 - 0.5 * d, 0.0), plate(0.5 * d, v)],
        substrate_permittivity: 1.0,
        domain: Domain {
            x_min: -6.5,
            x_max: 6.5,
            z_min: -1.0,
            z_max: 1.0,
        },
    }
}

fn device() -> ElectrodeGeometry2D {
    DeviceLayout::default().geometry().unwrap()
}

fn ez_between_plates(g: &Grid2D, x: f64) -> f64 {
    let i = ((x - g.x_min) / g.spacing).round() as usize;
    let j = ((0.0 - g.z_min) / g.spacing).round() as usize;
    -(g.value(i, j + 1) - g.value(i, j - 1)) / (2.0 * g.spacing)
}

#[test]
fn parallel_plate_field() {
    let g = solve_laplace(&capacitor(3.0, 0.5), 0.025, 1e-10).unwrap();
    for x in [-1.0, 0.0, 0.5, 2.0] {
        let ez = ez_between_plates(&g, x);
        assert!((ez - -6.0).abs() < 6e-3, "x = {x}: {ez}");
    }
}

#[test]
fn mirror_symmetry() {
    let g = solve_laplace(&device(), 0.05, 1e-10).unwrap();
    let p = field_at_height(&g, 0.09).unwrap();
    let n = p.x.len();
    // Profile starts at node 1; node nx/2 sits on x = 0.
    let mid = g.nx / 2 - 1;
    assert!(p.x[mid].abs() < 1e-12);
    for k in 1..mid {
        assert!((p.ez[mid - k] - p.ez[mid + k]).abs() < 1e-8);
        assert!((p.ex[mid - k] + p.ex[mid + k]).abs() < 1e-8);
    }
    assert!(n > 2 * mid);
}

#[test]
fn field_decays_with_height_above_gap() {
    let geom = device();
    let g = solve_laplace(&geom, 0.02, 1e-10).unwrap();
    let (a, b) = DeviceLayout::default().gap_edges();
    let xc = 0.5 * (a + b);
    let mut last = f64::INFINITY;
    for k in 0..=13 {
        let h = 0.04 + 0.02 * k as f64;
        let p = field_at_height(&g, h).unwrap();
        let e = catmull_rom(&p.x, &p.ex, xc).unwrap().hypot(catmull_rom(&p.x, &p.ez, xc).unwrap());
        assert!(e < last, "h = {h}: {e} >= {last}");
        last = e;
    }
}

#[test]
#[allow(clippy::approx_constant)]
fn projection_weights() {
    let (wx, wz) = ProjectionAxis::default().weights();
    assert!((wx - 0.6645).abs() < 5e-5);
    assert!((wz - 0.7071).abs() < 5e-5);
    let p = FieldProfile {
        x: vec![0.0, 1.0],
        ex: vec![2.0, -1.0],
        ez: vec![3.0, 0.5],
        height: 0.1,
        spacing: 1.0,
        residual: 0.0,
    };
    let vertical = project_zeta(&p, &ProjectionAxis { phi: 1.0, theta: 0.0 });
    assert_eq!(vertical.values, p.ez);
    let flat = project_zeta(
        &p,
        &ProjectionAxis {
            phi: 0.0,
            theta: std::f64::consts::FRAC_PI_2,
        },
    );
    for (a, b) in flat.values.iter().zip(&p.ex) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn gradient_peaks_at_electrode_edges() {
    let g = solve_laplace(&device(), 0.025, 1e-10).unwrap();
    let p = field_at_height(&g, 0.09).unwrap().window(0.0, 3.0);
    let grad = project_zeta(&p, &ProjectionAxis::default()).gradient(1).unwrap();
    let (imax, _) = grad
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap();
    let (a, b) = DeviceLayout::default().gap_edges();
    let x = grad.x[imax];
    assert!((x - a).abs() < 0.15 || (x - b).abs() < 0.15, "peak at {x}");
}

#[test]
fn gap_field_insensitive_to_far_boundary() {
    let sample = |padding: f64| {
        let geom = DeviceLayout {
            padding,
            ..Default::default()
        }
        .geometry()
        .unwrap();
        let g = solve_laplace(&geom, 0.05, 1e-10).unwrap();
        let p = field_at_height(&g, 0.1).unwrap();
        let i = p.x.iter().position(|&x| (x - 1.25).abs() < 1e-9).unwrap();
        p.ex[i].hypot(p.ez[i])
    };
    let (near, far) = (sample(10.0), sample(20.0));
    assert!((near - far).abs() / far < 0.01, "{near} vs {far}");
}

#[test]
fn grid_round_trip() {
    let g = solve_laplace(&device(), 0.1, 1e-9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (bin, txt) = (dir.path().join("g.bin"), dir.path().join("g.txt"));
    write_grid(&g, &bin, &txt).unwrap();
    let back = read_grid(&bin, &txt).unwrap();
    assert_eq!(back.potential, g.potential);
    assert_eq!((back.nx, back.nz, back.spacing), (g.nx, g.nz, g.spacing));
    assert_eq!(back.residual, g.residual);
    std::fs::write(&bin, [0u8; 16]).unwrap();
    assert!(read_grid(&bin, &txt).is_err());
}

#[test]
fn height_outside_domain_is_rejected() {
    let g = solve_laplace(&device(), 0.1, 1e-9).unwrap();
    assert!(matches!(
        field_at_height(&g, 0.0),
        Err(nvelectro::Error::HeightOutOfDomain { .. })
    ));
    assert!(field_at_height(&g, 100.0).is_err());
}

#[test]
fn zero_potentials_give_zero_field() {
    let geom = device().with_potentials(&[0.0, 0.0, 0.0]).unwrap();
    let g = solve_laplace(&geom, 0.1, 1e-9).unwrap();
    assert!(g.potential.iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn superposition(v in prop::array::uniform3(-5.0..5.0f64)) {
        let base = device();
        let solve = |p: [f64; 3]| {
            let g = solve_laplace(&base.with_potentials(&p).unwrap(), 0.05, 1e-10).unwrap();
            field_at_height(&g, 0.09).unwrap()
        };
        let units = [solve([1.0, 0.0, 0.0]), solve([0.0, 1.0, 0.0]), solve([0.0, 0.0, 1.0])];
        let full = solve(v);
        let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..full.x.len() {
            let ex: f64 = (0..3).map(|k| v[k] * units[k].ex[i]).sum();
            let ez: f64 = (0..3).map(|k| v[k] * units[k].ez[i]).sum();
            prop_assert!((full.ex[i] - ex).abs() < 1e-8 * scale);
            prop_assert!((full.ez[i] - ez).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn gradient_exact_for_quadratics(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64) {
        let x: Vec<f64> = (0..40).map(|i| -1.0 + 0.05 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| a + b * t + c * t * t).collect();
        let g = gradient_x(&x, &y, 1).unwrap();
        for i in 1..39 {
            prop_assert!((g[i] - (b + 2.0 * c * x[i])).abs() < 1e-9);
        }
    }
}
