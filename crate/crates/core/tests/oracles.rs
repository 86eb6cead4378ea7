mod support;

use asv_core::coverage::{dubins_connect, partition, plan, Polygon, Pose, SurveyArea};
use asv_core::geo::{
    boat_to_world, geo_to_local, wrap_angle, GeoPoint, Heading, LocalPoint, Vector2,
};
use asv_core::link::{crc16, decode, encode, FrameError, Message, Telemetry};
use asv_core::vehicle::{pwm_to_normalized, PwmSignal, ServoCalibration, VehicleParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{angle_diff, crc16_bitwise, dubins_length, OraclePose};

#[test]
fn crc_matches_bitwise_reference() {
    assert_eq!(crc16_bitwise(b"123456789"), 0x29B1);
    // frozen from the bitwise reference
    assert_eq!(crc16_bitwise(&[0x01, 0x02]), 0x0E7C);
    assert_eq!(crc16(&[0x01, 0x02]), 0x0E7C);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for len in 0..300 {
        let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        assert_eq!(crc16(&data), crc16_bitwise(&data), "len {len}");
    }
}

#[test]
fn wrap_angle_examples() {
    use std::f64::consts::PI;
    assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
    assert!((wrap_angle(3.0 * PI).unwrap() - PI).abs() < 1e-12);
    // repeated 2π addition until inside (-π, π]
    let mut a = -1.5 * PI;
    while a <= -PI {
        a += 2.0 * PI;
    }
    assert!((wrap_angle(-1.5 * PI).unwrap() - a).abs() < 1e-12);
    assert!((a - PI / 2.0).abs() < 1e-12);
    assert!(wrap_angle(f64::NAN).is_err());
}

#[test]
fn one_meter_north() {
    let o = GeoPoint::new(34.0, -81.0).unwrap();
    let p = GeoPoint::new(34.0 + 1.0 / 111_195.0, -81.0).unwrap();
    let l = geo_to_local(o, p).unwrap();
    // (1/111195)·(π/180)·6371000 at 30 significant digits
    assert!(
        (l.north - 0.999_999_340_299_102_8).abs() < 1e-9,
        "{}",
        l.north
    );
    assert_eq!(l.east, 0.0);
}

#[test]
fn boat_to_world_examples() {
    let z = boat_to_world(Vector2::ZERO, Heading::new(1.3).unwrap(), Vector2::ZERO).unwrap();
    assert_eq!(z, Vector2::ZERO);
    // northbound at 2 m/s feeling 3 m/s from the bow: true current 1 m/s south
    let v = boat_to_world(
        Vector2::new(-3.0, 0.0),
        Heading::NORTH,
        Vector2::new(0.0, 2.0),
    )
    .unwrap();
    assert!((v.x).abs() < 1e-12 && (v.y + 1.0).abs() < 1e-12);
    // stationary, facing east, 5 m/s from the bow: westward wind
    let w = boat_to_world(
        Vector2::new(-5.0, 0.0),
        Heading::new(std::f64::consts::FRAC_PI_2).unwrap(),
        Vector2::ZERO,
    )
    .unwrap();
    assert!((w.x + 5.0).abs() < 1e-12 && w.y.abs() < 1e-12);
}

#[test]
fn boat_to_world_matches_trig_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let psi = rng.random_range(0.0..std::f64::consts::TAU);
        let rel = Vector2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let vg = Vector2::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        let got = boat_to_world(rel, Heading::new(psi).unwrap(), vg).unwrap();
        let want = support::boat_to_world(rel.x, rel.y, psi, (vg.x, vg.y));
        assert!((got.x - want.0).abs() < 1e-9 && (got.y - want.1).abs() < 1e-9);
    }
}

#[test]
fn pwm_interpolation() {
    let cal = ServoCalibration::new(1100, 1500, 1900, false).unwrap();
    assert_eq!(pwm_to_normalized(PwmSignal(1500), &cal), 0.0);
    assert_eq!(pwm_to_normalized(PwmSignal(1900), &cal), 1.0);
    let rev = ServoCalibration {
        reversed: true,
        ..cal
    };
    // (1300 - 1500) / (1500 - 1100) = -0.5, negated
    assert_eq!(pwm_to_normalized(PwmSignal(1300), &rev), 0.5);
}

#[test]
fn fuel_endurance_endpoints() {
    let p = VehicleParams::default();
    assert!((p.fuel_endurance(1.0) - 4.0).abs() < 1e-12);
    assert!((p.fuel_endurance(0.0) - 18.0).abs() < 1e-12);
    // 9.8 / ((9.8/18 + 9.8/4) / 2) = 2 / (1/18 + 1/4) = 36 / 5.5
    assert!((p.fuel_endurance(0.5) - 36.0 / 5.5).abs() < 1e-12);
}

#[test]
fn every_single_bit_flip_is_detected() {
    let msg = Message::Telemetry(Telemetry {
        lat: 34.0012,
        lon: -81.0377,
        psi: 1.25,
        v_water: 4.5,
        vg_east: 3.1,
        vg_north: -0.4,
        fuel: 7.25,
        t: 1234.5,
    });
    let frame = encode(&msg, 9, 3).unwrap();
    for bit in 0..frame.len() * 8 {
        let mut f = frame.clone();
        f[bit / 8] ^= 1 << (bit % 8);
        match decode(&f) {
            Err(
                FrameError::CrcMismatch
                | FrameError::BadMagic
                | FrameError::Truncated
                | FrameError::BadLength,
            ) => {}
            other => panic!("bit {bit}: {other:?}"),
        }
    }
}

fn rand_pose(rng: &mut ChaCha8Rng) -> (Pose, OraclePose) {
    let x = rng.random_range(-40.0..40.0);
    let y = rng.random_range(-40.0..40.0);
    let psi = rng.random_range(0.0..std::f64::consts::TAU);
    (
        Pose::new(LocalPoint::new(x, y), Heading::new(psi).unwrap()),
        OraclePose {
            x,
            y,
            psi: Heading::new(psi).unwrap().radians(),
        },
    )
}

#[test]
fn dubins_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let r = 5.0;
    for i in 0..1000 {
        let (a, oa) = rand_pose(&mut rng);
        let (b, ob) = rand_pose(&mut rng);
        let path = dubins_connect(a, b, r).unwrap();
        let want = dubins_length(oa, ob, r);
        assert!(
            (path.length() - want).abs() < 1e-6,
            "pair {i}: {} vs {want} ({:?})",
            path.length(),
            path.kind
        );
        let end = path.end();
        assert!(end.pos.distance(b.pos) < 1e-6, "pair {i}");
        assert!(angle_diff(end.heading.radians(), b.heading.radians()).abs() < 1e-6);
    }
}

fn square(side: f64) -> Polygon {
    Polygon::new(vec![
        LocalPoint::new(0.0, 0.0),
        LocalPoint::new(side, 0.0),
        LocalPoint::new(side, side),
        LocalPoint::new(0.0, side),
    ])
    .unwrap()
}

#[test]
fn three_way_partition_is_equal_area() {
    let hex = Polygon::new(vec![
        LocalPoint::new(0.0, 0.0),
        LocalPoint::new(120.0, -10.0),
        LocalPoint::new(180.0, 60.0),
        LocalPoint::new(150.0, 140.0),
        LocalPoint::new(40.0, 150.0),
        LocalPoint::new(-20.0, 70.0),
    ])
    .unwrap();
    for poly in [square(100.0), hex] {
        let area = SurveyArea::new(poly.clone(), 10.0, Heading::NORTH).unwrap();
        let p = partition(&area, 3).unwrap();
        assert_eq!(p.parts.len(), 3);
        let target = poly.area() / 3.0;
        let total: f64 = p.parts.iter().map(|a| a.boundary.area()).sum();
        assert!((total - poly.area()).abs() < 1e-6 * poly.area());
        for part in &p.parts {
            assert!((part.boundary.area() - target).abs() <= 0.01 * target);
        }
    }
}

#[test]
fn plan_covers_convex_polygons() {
    let tri = Polygon::new(vec![
        LocalPoint::new(0.0, 0.0),
        LocalPoint::new(150.0, 20.0),
        LocalPoint::new(60.0, 130.0),
    ])
    .unwrap();
    for (poly, k, heading) in [
        (square(100.0), 1, 0.0),
        (square(100.0), 3, 0.0),
        (tri, 2, 0.6),
    ] {
        let area = SurveyArea::new(poly, 10.0, Heading::new(heading).unwrap()).unwrap();
        let entries = vec![LocalPoint::new(-20.0, -20.0); k];
        let p = plan(&area, k, 5.0, &entries).unwrap();
        assert!(p.coverage_ratio >= 0.99, "{}", p.coverage_ratio);
        for v in &p.vehicles {
            assert!(asv_core::coverage::min_turn_radius(&v.waypoints) >= 5.0 * (1.0 - 1e-6));
        }
    }
}
