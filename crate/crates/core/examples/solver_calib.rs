//! Scratch: residual pace across degradation levels (not shipped).
use pano_stitch::config::PipelineConfig;
use pano_stitch::pipeline::*;

fn main() {
    let config = PipelineConfig::default();
    for (label, noise, down, blur) in [
        ("noise only      ", 0.02, 1usize, 0usize),
        ("mild  (2,1) 0.01", 0.01, 2, 1),
        ("mid   (2,1) 0.02", 0.02, 2, 1),
        ("harsh (4,2) 0.02", 0.02, 4, 2),
    ] {
        let options = SynthOptions {
            noise_sigma: noise, degrade_down: down, degrade_blur: blur,
            ..Default::default()
        };
        let synth = synthesize(&options, &config).unwrap();
        let (_, report) = stitch_partials(
            &synth.partials, &synth.partitions, &synth.reference, &config,
        ).unwrap();
        let h = &report.blend.levels.last().unwrap().residual_history;
        let reach = h.iter().position(|&r| r <= 1e-3 * h[0]);
        println!(
            "{label}: r0 {:.3e} r_final {:.3e} ratio {:.3e} reach {:?} iters {}",
            h[0], h.last().unwrap(), h.last().unwrap() / h[0], reach, h.len() - 1
        );
    }
}
