//! Body length from a mask: skeleton, longest geodesic path, tip extension, metric scale.

use flair::morphometry::{measure_length, skeletonize, trace_centerline, CameraModel};
use flair::synth::SwimmerSpec;

fn main() -> flair::Result<()> {
    let cam = CameraModel::default();
    println!("scale at {} m altitude: {:.9} m/px", cam.altitude_m, cam.meters_per_pixel()?);

    let straight = SwimmerSpec {
        amplitude_px: 0.0,
        ..SwimmerSpec::default()
    };
    let bent = SwimmerSpec::default();
    for (name, swimmer, t) in [("straight", &straight, 0.0), ("bent", &bent, 0.5)] {
        let mask = swimmer.rasterize(t, 400, 300).expect("swimmer fits in frame");
        let skeleton = skeletonize(&mask)?;
        let centerline = trace_centerline(&skeleton, &mask)?;
        let m = measure_length(&mask, &cam)?;
        println!(
            "{name}: true arc {:.1} px, skeleton path {:.1} px + tips {:.1}/{:.1} px = {:.1} px = {:.3} m",
            swimmer.arc_length(t),
            centerline.path_px,
            centerline.extension_px[0],
            centerline.extension_px[1],
            m.length_px,
            m.length_m
        );
    }
    Ok(())
}
