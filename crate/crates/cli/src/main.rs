//! Command-line front end for the panoramic depth stitching pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pano_stitch::config::PipelineConfig;
use pano_stitch::error::Result;
use pano_stitch::pipeline::{
    cmd_eval, cmd_partition, cmd_stitch, cmd_synth, render_run_report, write_depth_png16,
    SynthOptions,
};

#[derive(Parser)]
#[command(
    name = "pano-stitch",
    about = "Stitch perspective depth maps into an equirectangular depth panorama",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file plus common field overrides.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Pipeline config file (TOML); defaults mirror the built-in values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Azimuth cut list in degrees, e.g. 0,72,144,216,288
    #[arg(long, value_delimiter = ',')]
    azimuth_cuts: Option<Vec<f64>>,
    /// Zenith cut list in degrees, e.g. 25,60,120,155
    #[arg(long, value_delimiter = ',')]
    zenith_cuts: Option<Vec<f64>>,
    /// Registration polynomial degree (1, 2 or 3)
    #[arg(long)]
    degree: Option<u8>,
    /// Registration sampling step in degrees
    #[arg(long)]
    step: Option<f64>,
    /// Blend regularization weight γ
    #[arg(long)]
    gamma: Option<f64>,
    /// Jacobi damping factor ω in (0, 1]
    #[arg(long)]
    omega: Option<f64>,
    /// Horizontal partition padding in pixels
    #[arg(long)]
    pad_x: Option<usize>,
    /// Vertical partition padding in pixels
    #[arg(long)]
    pad_y: Option<usize>,
    /// Convert planar view depth to ray range when warping (true/false)
    #[arg(long)]
    z_to_range: Option<bool>,
    /// Wrap the blend Laplacian across the azimuth seam (true/false)
    #[arg(long)]
    wrap_laplacian: Option<bool>,
    /// Rendered view size as WIDTHxHEIGHT
    #[arg(long)]
    view_size: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(cuts) = &self.azimuth_cuts {
            config.azimuth_cuts = cuts.clone();
        }
        if let Some(cuts) = &self.zenith_cuts {
            config.zenith_cuts = cuts.clone();
        }
        if let Some(degree) = self.degree {
            config.registration_degree = degree;
        }
        if let Some(step) = self.step {
            config.sample_step_deg = step;
        }
        if let Some(gamma) = self.gamma {
            config.gamma = gamma;
        }
        if let Some(omega) = self.omega {
            config.omega = omega;
        }
        if let Some(pad_x) = self.pad_x {
            config.pad_x = pad_x;
        }
        if let Some(pad_y) = self.pad_y {
            config.pad_y = pad_y;
        }
        if let Some(z) = self.z_to_range {
            config.z_to_range = z;
        }
        if let Some(wrap) = self.wrap_laplacian {
            config.wrap_laplacian = wrap;
        }
        if let Some(size) = &self.view_size {
            let (w, h) = size.split_once('x').ok_or_else(|| {
                pano_stitch::Error::Config(format!("view size {size:?} is not WIDTHxHEIGHT"))
            })?;
            config.view_width = w.parse().map_err(|_| {
                pano_stitch::Error::Config(format!("bad view width {w:?}"))
            })?;
            config.view_height = h.parse().map_err(|_| {
                pano_stitch::Error::Config(format!("bad view height {h:?}"))
            })?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Render per-partition RGB views of a panorama and write the manifest
    /// for an external depth estimator
    Partition {
        /// Input equirectangular RGB panorama (PNG)
        rgb: PathBuf,
        /// Output directory for views and manifest
        #[arg(short, long, default_value = "views")]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Register and blend the manifest's depth maps into a panorama
    Stitch {
        /// Manifest written by `partition` or `synth`
        manifest: PathBuf,
        /// Reference panoramic depth map (PFM)
        reference: PathBuf,
        /// Output panorama (PFM)
        #[arg(short, long, default_value = "stitched.pfm")]
        out: PathBuf,
        /// Also write a 16-bit grayscale PNG preview
        #[arg(long)]
        png: Option<PathBuf>,
        /// Run report path (default: output with .report.txt extension)
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Median-scale a prediction against ground truth and print the metrics
    Eval {
        /// Predicted depth panorama (PFM)
        pred: PathBuf,
        /// Ground-truth depth panorama (PFM)
        gt: PathBuf,
        /// Also write the record to a file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the synthetic box-room fixture set
    Synth {
        /// Output directory
        #[arg(short, long, default_value = "synth")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Additive Gaussian noise sigma in meters
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        /// Keep partials equal to the cut-up ground truth
        #[arg(long)]
        identity: bool,
        /// Reference downsample factor (1 = exact ground truth)
        #[arg(long, default_value_t = 1)]
        degrade_down: usize,
        /// Reference box-blur radius at the downsampled resolution
        #[arg(long, default_value_t = 0)]
        degrade_blur: usize,
        /// Room half-extents in meters, e.g. 1.7,1.7,1.25
        #[arg(long, value_delimiter = ',', num_args = 3)]
        half_extents: Option<Vec<f64>>,
        /// Camera position in meters, e.g. 0.5,0.35,-0.15
        #[arg(long, value_delimiter = ',', num_args = 3)]
        camera: Option<Vec<f64>>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Partition {
            rgb,
            out_dir,
            config,
        } => {
            let config = config.resolve()?;
            let manifest = cmd_partition(&rgb, &config, &out_dir)?;
            println!(
                "wrote {} views and {}",
                manifest.entries.len(),
                out_dir.join("manifest.toml").display()
            );
            println!(
                "produce the {} depth files named in the manifest, then run `pano-stitch stitch`",
                manifest.entries.len()
            );
        }
        Command::Stitch {
            manifest,
            reference,
            out,
            png,
            report,
            config,
        } => {
            let config = config.resolve()?;
            let (stitched, stitch_report) = cmd_stitch(&manifest, &reference, &config, &out)?;
            let report_path = report.unwrap_or_else(|| out.with_extension("report.txt"));
            let text = render_run_report(&stitch_report);
            std::fs::write(&report_path, &text)
                .map_err(|e| pano_stitch::Error::Io {
                    path: report_path.display().to_string(),
                    source: e,
                })?;
            if let Some(png_path) = png {
                let scale = write_depth_png16(&stitched, &png_path)?;
                println!("png_depth_scale {scale}");
            }
            print!(
                "{}",
                text.lines()
                    .filter(|l| l.starts_with("schedule") || l.starts_with("timing"))
                    .map(|l| format!("{l}\n"))
                    .collect::<String>()
            );
            println!("wrote {} and {}", out.display(), report_path.display());
        }
        Command::Eval { pred, gt, out } => {
            let (_, record) = cmd_eval(&pred, &gt)?;
            if let Some(path) = out {
                std::fs::write(&path, &record).map_err(|e| pano_stitch::Error::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
            }
            print!("{record}");
        }
        Command::Synth {
            out_dir,
            width,
            height,
            seed,
            noise_sigma,
            identity,
            degrade_down,
            degrade_blur,
            half_extents,
            camera,
            config,
        } => {
            let config = config.resolve()?;
            let mut options = SynthOptions {
                width,
                height,
                seed,
                noise_sigma,
                distort: !identity,
                degrade_down,
                degrade_blur,
                ..SynthOptions::default()
            };
            if let Some(he) = half_extents {
                options.half_extents = (he[0], he[1], he[2]);
            }
            if let Some(c) = camera {
                options.camera = (c[0], c[1], c[2]);
            }
            let outputs = cmd_synth(&options, &config, &out_dir)?;
            println!(
                "wrote gt.pfm, reference.pfm, {} partials, manifest.toml, distortions.txt in {}",
                outputs.partials.len(),
                out_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
