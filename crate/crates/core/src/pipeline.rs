//! End-to-end orchestration: the `partition`, `stitch`, `eval`, and `synth`
//! commands behind the CLI, plus the run-report and metrics-record formats.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blending::{multiscale_blend, BlendReport, BlendSchedule};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::grid::EquirectGrid;
use crate::manifest::{DepthSpace, ViewEntry, ViewManifest, MANIFEST_SCHEMA};
use crate::metrics::{evaluate, MetricsReport};
use crate::partition::{padded_pixel_rect, rect_to_partition, Partition};
use crate::pfm::{read_pfm, write_pfm};
use crate::registration::{apply_poly, fit_poly, sample_pairs, RegistrationPoly};
use crate::synthetic::{
    degrade_reference, make_distorted_partials, render_room_panorama, BoxRoom, DistortionSpec,
};
use crate::view::{render_view, solve_view_for_partition, warp_view_to_equirect, PerspectiveView};

/// Per-partition registration outcome.
#[derive(Debug, Clone)]
pub struct PartitionReport {
    pub index: usize,
    pub samples: usize,
    pub poly: RegistrationPoly,
}

/// Everything `stitch` reports alongside the stitched panorama.
#[derive(Debug, Clone)]
pub struct StitchReport {
    pub width: usize,
    pub height: usize,
    pub schedule: BlendSchedule,
    pub partitions: Vec<PartitionReport>,
    pub blend: BlendReport,
    pub registration_seconds: f64,
    pub blend_seconds: f64,
    pub total_seconds: f64,
}

/// Registers each partial against the reference and blends the results.
///
/// `partials` are equirectangular grids valid on their padded partition
/// rectangles; `partitions` are the matching unpadded partitions the
/// registration samples.
pub fn stitch_partials(
    partials: &[EquirectGrid],
    partitions: &[Partition],
    reference: &EquirectGrid,
    config: &PipelineConfig,
) -> Result<(EquirectGrid, StitchReport)> {
    config.validate()?;
    if partials.len() != partitions.len() {
        return Err(Error::Config(format!(
            "{} partials for {} partitions",
            partials.len(),
            partitions.len()
        )));
    }
    let total_start = Instant::now();
    let (width, height) = (reference.width(), reference.height());
    let schedule = config.blend_schedule(width, height)?;

    let reg_start = Instant::now();
    let mut registered = Vec::with_capacity(partials.len());
    let mut reports = Vec::with_capacity(partials.len());
    for (k, (partial, partition)) in partials.iter().zip(partitions).enumerate() {
        let pairs = sample_pairs(partial, reference, partition, config.sample_step_deg)
            .map_err(Error::for_partition(k))?;
        let poly = fit_poly(&pairs, config.registration_degree).map_err(Error::for_partition(k))?;
        registered.push(apply_poly(&poly, partial));
        reports.push(PartitionReport {
            index: k,
            samples: pairs.len(),
            poly,
        });
    }
    let registration_seconds = reg_start.elapsed().as_secs_f64();

    let blend_start = Instant::now();
    let (stitched, blend) =
        multiscale_blend(&registered, reference, &schedule, config.wrap_laplacian)?;
    let blend_seconds = blend_start.elapsed().as_secs_f64();

    let report = StitchReport {
        width,
        height,
        schedule,
        partitions: reports,
        blend,
        registration_seconds,
        blend_seconds,
        total_seconds: total_start.elapsed().as_secs_f64(),
    };
    Ok((stitched, report))
}

/// Solves the perspective view covering a partition's padded rectangle.
pub fn solve_padded_view(
    partition: &Partition,
    width: usize,
    height: usize,
    config: &PipelineConfig,
) -> Result<(PerspectiveView, Partition)> {
    let rect = padded_pixel_rect(partition, width, height, config.pad_x, config.pad_y);
    let padded = rect_to_partition(&rect, width, height)?;
    let view = solve_view_for_partition(&padded, config.view_width, config.view_height)?;
    Ok((view, padded))
}

/// Renders per-partition RGB views of an equirectangular panorama and
/// writes the manifest naming the depth files an estimator must produce.
pub fn cmd_partition(
    rgb_path: impl AsRef<Path>,
    config: &PipelineConfig,
    out_dir: impl AsRef<Path>,
) -> Result<ViewManifest> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let image = image::open(&rgb_path)?.to_rgb8();
    let (width, height) = (image.width() as usize, image.height() as usize);
    let mut channels =
        [(); 3].map(|_| EquirectGrid::new_full(width, height));
    for (x, y, pixel) in image.enumerate_pixels() {
        for (ch, grid) in channels.iter_mut().enumerate() {
            grid.set(x as usize, y as usize, pixel.0[ch] as f64);
        }
    }

    let grid = config.partition_grid()?;
    let mut entries = Vec::with_capacity(grid.len());
    for (k, partition) in grid.partitions().iter().enumerate() {
        let (view, _) = solve_padded_view(partition, width, height, config)
            .map_err(Error::for_partition(k))?;
        let rendered: Vec<_> = channels
            .iter()
            .map(|ch| render_view(ch, &view))
            .collect::<Result<_>>()
            .map_err(Error::for_partition(k))?;
        let mut out = image::RgbImage::new(view.width as u32, view.height as u32);
        for (x, y, pixel) in out.enumerate_pixels_mut() {
            for ch in 0..3 {
                let v = rendered[ch]
                    .get(x as usize, y as usize)
                    .unwrap_or(0.0)
                    .round()
                    .clamp(0.0, 255.0);
                pixel.0[ch] = v as u8;
            }
        }
        let rgb_file = format!("view_{k:02}.png");
        out.save(out_dir.join(&rgb_file))?;
        entries.push(ViewEntry {
            index: k,
            partition: [
                partition.phi0,
                partition.phi1,
                partition.theta0,
                partition.theta1,
            ],
            center_azimuth_deg: view.center.azimuth_deg(),
            center_zenith_deg: view.center.zenith_deg(),
            fov_x_deg: view.fov_x_deg,
            fov_y_deg: view.fov_y_deg,
            view_width: view.width,
            view_height: view.height,
            rgb_file,
            depth_file: format!("view_{k:02}_depth.pfm"),
        });
    }

    let manifest = ViewManifest {
        schema: MANIFEST_SCHEMA.into(),
        width,
        height,
        pad_x: config.pad_x,
        pad_y: config.pad_y,
        depth_space: DepthSpace::View,
        entries,
    };
    manifest.validate()?;
    manifest.save(out_dir.join("manifest.toml"))?;
    Ok(manifest)
}

/// Loads the per-partition depth maps a manifest names, warping view-space
/// rasters onto their padded rectangles.
pub fn load_manifest_partials(
    manifest: &ViewManifest,
    manifest_dir: &Path,
    config: &PipelineConfig,
) -> Result<(Vec<EquirectGrid>, Vec<Partition>)> {
    let mut partials = Vec::with_capacity(manifest.entries.len());
    let mut partitions = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let k = entry.index;
        let path = manifest_dir.join(&entry.depth_file);
        if !path.is_file() {
            return Err(Error::MissingDepthFile(path));
        }
        let raster = read_pfm(&path)?;
        let partition = entry.partition()?;
        let partial = match manifest.depth_space {
            DepthSpace::View => {
                if raster.width != entry.view_width || raster.height != entry.view_height {
                    return Err(Error::for_partition(k)(Error::Manifest(format!(
                        "depth raster {}x{} does not match view size {}x{}",
                        raster.width, raster.height, entry.view_width, entry.view_height
                    ))));
                }
                let view = entry.view()?;
                warp_view_to_equirect(
                    &raster,
                    &view,
                    &partition,
                    manifest.width,
                    manifest.height,
                    manifest.pad_x,
                    manifest.pad_y,
                    config.z_to_range,
                )
                .map_err(Error::for_partition(k))?
            }
            DepthSpace::Equirect => {
                if raster.width != manifest.width || raster.height != manifest.height {
                    return Err(Error::for_partition(k)(Error::Manifest(format!(
                        "equirect partial {}x{} does not match canvas {}x{}",
                        raster.width, raster.height, manifest.width, manifest.height
                    ))));
                }
                EquirectGrid::from_raster(&raster)
            }
        };
        partials.push(partial);
        partitions.push(partition);
    }
    Ok((partials, partitions))
}

/// Full stitch: loads the manifest, reference, and depth files, registers,
/// blends, and writes the stitched panorama.
pub fn cmd_stitch(
    manifest_path: impl AsRef<Path>,
    reference_path: impl AsRef<Path>,
    config: &PipelineConfig,
    out_path: impl AsRef<Path>,
) -> Result<(EquirectGrid, StitchReport)> {
    let manifest_path = manifest_path.as_ref();
    let manifest = ViewManifest::load(manifest_path)?;
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new("."));

    let reference_raster = read_pfm(&reference_path)?;
    if reference_raster.width != manifest.width || reference_raster.height != manifest.height {
        return Err(Error::Manifest(format!(
            "reference {}x{} does not match manifest canvas {}x{}",
            reference_raster.width, reference_raster.height, manifest.width, manifest.height
        )));
    }
    let reference = EquirectGrid::from_raster(&reference_raster);

    let (partials, partitions) = load_manifest_partials(&manifest, manifest_dir, config)?;
    let (stitched, report) = stitch_partials(&partials, &partitions, &reference, config)?;
    write_pfm(&stitched.to_full_raster(), &out_path)?;
    Ok((stitched, report))
}

/// The pinned run-report text format.
pub fn render_run_report(report: &StitchReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "pano-stitch run report v1").unwrap();
    writeln!(out, "working_resolution {}x{}", report.width, report.height).unwrap();
    writeln!(out, "partitions {}", report.partitions.len()).unwrap();
    for (k, ((w, h), iters)) in report
        .schedule
        .levels
        .iter()
        .zip(&report.schedule.iterations)
        .enumerate()
    {
        writeln!(out, "schedule level {k}: {w}x{h} iterations {iters}").unwrap();
    }
    for p in &report.partitions {
        writeln!(
            out,
            "partition {} samples {} degree {} a {} b {} c {} d {}",
            p.index, p.samples, p.poly.degree, p.poly.a, p.poly.b, p.poly.c, p.poly.d
        )
        .unwrap();
    }
    for (k, level) in report.blend.levels.iter().enumerate() {
        let history: Vec<String> = level
            .residual_history
            .iter()
            .map(|r| format!("{r:e}"))
            .collect();
        writeln!(
            out,
            "level {k} iterations_used {} residuals: {}",
            level.iterations_used,
            history.join(" ")
        )
        .unwrap();
    }
    writeln!(out, "timing registration_s {:.3}", report.registration_seconds).unwrap();
    writeln!(out, "timing blend_s {:.3}", report.blend_seconds).unwrap();
    writeln!(out, "timing total_s {:.3}", report.total_seconds).unwrap();
    out
}

/// The pinned metrics-record text format: one `key value` line per metric.
pub fn format_metrics_record(m: &MetricsReport) -> String {
    format!(
        "rmse {}\nmae {}\nabsrel {}\nrmse_log10 {}\ndelta1 {}\ndelta2 {}\ndelta3 {}\nlap_mae {}\nlog_mae {}\npixels {}\n",
        m.rmse,
        m.mae,
        m.absrel,
        m.rmse_log10,
        m.delta1,
        m.delta2,
        m.delta3,
        m.lap_mae,
        m.log_mae,
        m.pixel_count
    )
}

/// Median-scales the prediction against the ground truth and evaluates the
/// full metric set.
pub fn cmd_eval(
    pred_path: impl AsRef<Path>,
    gt_path: impl AsRef<Path>,
) -> Result<(MetricsReport, String)> {
    let pred = read_pfm(&pred_path)?;
    let gt = read_pfm(&gt_path)?;
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::Metrics(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            pred.width, pred.height, gt.width, gt.height
        )));
    }
    let report = evaluate(
        &EquirectGrid::from_raster(&pred),
        &EquirectGrid::from_raster(&gt),
    )?;
    let record = format_metrics_record(&report);
    Ok((report, record))
}

/// Parameters of the synthetic fixture generator.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub half_extents: (f64, f64, f64),
    pub camera: (f64, f64, f64),
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    /// Draw random cubic per-partition distortions; identity otherwise.
    pub distort: bool,
    /// Reference degradation (1 and 0 keep the reference equal to the
    /// ground truth).
    pub degrade_down: usize,
    pub degrade_blur: usize,
}

impl Default for SynthOptions {
    /// A typical 3.4×3.4×2.5 m room with the camera slightly off-center;
    /// ray ranges span roughly 1.2–3.3 m.
    fn default() -> Self {
        Self {
            half_extents: (1.7, 1.7, 1.25),
            camera: (0.5, 0.35, -0.15),
            width: 512,
            height: 256,
            seed: 7,
            noise_sigma: 0.0,
            distort: true,
            degrade_down: 1,
            degrade_blur: 0,
        }
    }
}

/// Coefficient bounds for drawn distortions: |a| ≤ 1e−3, |b| ≤ 1e−2,
/// |c| ≤ 0.5, |d| ≤ 1. Over depth ranges up to ~6.5 m these stay strictly
/// increasing.
pub const DISTORTION_BOUNDS: (f64, f64, f64, f64) = (1e-3, 1e-2, 0.5, 1.0);

/// Draws one random monotone cubic distortion per partition.
pub fn draw_distortions(n: usize, seed: u64, noise_sigma: f64) -> DistortionSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut symmetric = |bound: f64| rng.gen_range(-bound..=bound);
    let (ba, bb, bc, bd) = DISTORTION_BOUNDS;
    let polys = (0..n)
        .map(|_| RegistrationPoly {
            a: symmetric(ba),
            b: symmetric(bb),
            c: symmetric(bc),
            d: symmetric(bd),
            degree: 3,
        })
        .collect();
    DistortionSpec {
        polys,
        noise_sigma,
        seed,
    }
}

/// Everything `synth` produced, with the grids kept in memory for callers
/// that evaluate immediately.
#[derive(Debug, Clone)]
pub struct SynthOutputs {
    pub gt: EquirectGrid,
    pub reference: EquirectGrid,
    pub partials: Vec<EquirectGrid>,
    pub partitions: Vec<Partition>,
    pub spec: DistortionSpec,
    pub manifest: ViewManifest,
}

/// Builds the synthetic scene in memory: ground truth, (optionally
/// degraded) reference, and distorted per-partition partials.
pub fn synthesize(options: &SynthOptions, config: &PipelineConfig) -> Result<SynthOutputs> {
    config.validate()?;
    let room = BoxRoom::new(options.half_extents, options.camera)?;
    let gt = render_room_panorama(&room, options.width, options.height)?;
    let grid = config.partition_grid()?;

    let spec = if options.distort {
        draw_distortions(grid.len(), options.seed, options.noise_sigma)
    } else {
        let mut spec = DistortionSpec::identity(grid.len(), options.seed);
        spec.noise_sigma = options.noise_sigma;
        spec
    };
    let (mut depth_min, mut depth_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, _, v) in gt.iter_valid() {
        depth_min = depth_min.min(v);
        depth_max = depth_max.max(v);
    }
    spec.validate(depth_min, depth_max)?;

    let partials = make_distorted_partials(&gt, &grid, &spec, config.pad_x, config.pad_y)?;
    let reference = if options.degrade_down > 1 || options.degrade_blur > 0 {
        degrade_reference(&gt, options.degrade_down, options.degrade_blur)?
    } else {
        gt.clone()
    };

    let mut entries = Vec::with_capacity(grid.len());
    for (k, partition) in grid.partitions().iter().enumerate() {
        let (view, _) = solve_padded_view(partition, options.width, options.height, config)
            .map_err(Error::for_partition(k))?;
        entries.push(ViewEntry {
            index: k,
            partition: [
                partition.phi0,
                partition.phi1,
                partition.theta0,
                partition.theta1,
            ],
            center_azimuth_deg: view.center.azimuth_deg(),
            center_zenith_deg: view.center.zenith_deg(),
            fov_x_deg: view.fov_x_deg,
            fov_y_deg: view.fov_y_deg,
            view_width: view.width,
            view_height: view.height,
            rgb_file: String::new(),
            depth_file: format!("partial_{k:02}.pfm"),
        });
    }
    let manifest = ViewManifest {
        schema: MANIFEST_SCHEMA.into(),
        width: options.width,
        height: options.height,
        pad_x: config.pad_x,
        pad_y: config.pad_y,
        depth_space: DepthSpace::Equirect,
        entries,
    };
    manifest.validate()?;

    Ok(SynthOutputs {
        gt,
        reference,
        partials,
        partitions: grid.partitions().to_vec(),
        spec,
        manifest,
    })
}

/// Runs [`synthesize`] and writes the fixture set: `gt.pfm`,
/// `reference.pfm`, `partial_NN.pfm`, `manifest.toml`, and a record of the
/// injected distortions.
pub fn cmd_synth(
    options: &SynthOptions,
    config: &PipelineConfig,
    out_dir: impl AsRef<Path>,
) -> Result<SynthOutputs> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let outputs = synthesize(options, config)?;

    write_pfm(&outputs.gt.to_full_raster(), out_dir.join("gt.pfm"))?;
    write_pfm(
        &outputs.reference.to_full_raster(),
        out_dir.join("reference.pfm"),
    )?;
    for (k, partial) in outputs.partials.iter().enumerate() {
        write_pfm(
            &partial.to_full_raster(),
            out_dir.join(format!("partial_{k:02}.pfm")),
        )?;
    }
    outputs.manifest.save(out_dir.join("manifest.toml"))?;

    let mut record = String::new();
    use std::fmt::Write;
    writeln!(record, "pano-stitch synth record v1").unwrap();
    writeln!(record, "seed {}", outputs.spec.seed).unwrap();
    writeln!(record, "noise_sigma {}", outputs.spec.noise_sigma).unwrap();
    for (k, p) in outputs.spec.polys.iter().enumerate() {
        writeln!(record, "distortion {k} a {} b {} c {} d {}", p.a, p.b, p.c, p.d).unwrap();
    }
    std::fs::write(out_dir.join("distortions.txt"), record)
        .map_err(|e| Error::io(out_dir.join("distortions.txt"), e))?;
    Ok(outputs)
}

/// Writes a 16-bit grayscale PNG of a depth grid, scaled so the maximum
/// valid depth maps to 65535. Returns that scale (meters at full white).
pub fn write_depth_png16(grid: &EquirectGrid, path: impl AsRef<Path>) -> Result<f64> {
    let max = grid
        .iter_valid()
        .map(|(_, _, v)| v)
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(
        grid.width() as u32,
        grid.height() as u32,
    );
    for (col, row, v) in grid.iter_valid() {
        let level = ((v / max) * 65535.0).round().clamp(0.0, 65535.0) as u16;
        img.put_pixel(col as u32, row as u32, image::Luma([level]));
    }
    img.save_with_format(PathBuf::from(path.as_ref()), image::ImageFormat::Png)?;
    Ok(max)
}
