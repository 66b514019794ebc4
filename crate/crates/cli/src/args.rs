use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, ValueEnum};
use tempofuse_core::fusion::TemporalProfile;
use tempofuse_core::{ColorTarget, FusionJob, FusionMode, FusionParams, QualityExponents};

pub const DEFAULT_COLOR_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Video,
    Photo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Gaussian,
    Uniform,
}

impl From<Profile> for TemporalProfile {
    fn from(p: Profile) -> Self {
        match p {
            Profile::Gaussian => TemporalProfile::Gaussian,
            Profile::Uniform => TemporalProfile::Uniform,
        }
    }
}

/// Blend a registered frame sequence into long-exposure video frames or a
/// single long-exposure photograph.
#[derive(Debug, Parser)]
#[command(name = "tempofuse", version, about)]
struct Args {
    /// Input frames: a directory of .png/.ppm files or a glob pattern.
    #[arg(long)]
    input: String,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Video)]
    mode: Mode,
    /// Previous frames blended into each output.
    #[arg(long, default_value_t = 25)]
    tau: usize,
    /// Source frame rate, used to report the virtual exposure time.
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    /// Contrast exponent.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha_c: f64,
    /// Saturation exponent.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha_s: f64,
    /// Well-exposedness exponent.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha_e: f64,
    /// Temporal distinctness gain; positive enhances moving content,
    /// negative suppresses it.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha_d: f64,
    /// Only blend history pixels close to this colour (hex RRGGBB).
    #[arg(long)]
    color: Option<String>,
    /// Euclidean RGB distance, in [0, sqrt(3)], for --color matching.
    #[arg(long, default_value_t = DEFAULT_COLOR_THRESHOLD, allow_negative_numbers = true)]
    color_threshold: f64,
    /// Pyramid levels (default: deepest supported minus one).
    #[arg(long)]
    depth: Option<usize>,
    /// Temporal profile (default: gaussian for video, uniform for photo).
    #[arg(long, value_enum)]
    profile: Option<Profile>,
    /// Output bits per sample: 8 or 16.
    #[arg(long, default_value_t = 8, value_parser = parse_bit_depth)]
    bit_depth: u8,
    /// Write per-frame feature and weight maps as grayscale PNGs.
    #[arg(long)]
    dump_maps: bool,
}

/// Fully validated command-line configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub input_pattern: String,
    pub output_dir: PathBuf,
    pub mode: Mode,
    pub tau: usize,
    pub fps: f64,
    pub alpha_c: f64,
    pub alpha_s: f64,
    pub alpha_e: f64,
    pub alpha_d: f64,
    pub color: Option<[f64; 3]>,
    pub color_threshold: f64,
    pub depth: Option<usize>,
    pub profile: TemporalProfile,
    pub bit_depth: u8,
    pub dump_maps: bool,
}

impl CliConfig {
    pub fn params(&self) -> FusionParams {
        FusionParams {
            tau: self.tau,
            fps: Some(self.fps),
            alpha_d: self.alpha_d,
            exps: QualityExponents {
                alpha_c: self.alpha_c,
                alpha_s: self.alpha_s,
                alpha_e: self.alpha_e,
            },
            depth: self.depth,
            profile: self.profile,
        }
    }

    pub fn color_target(&self) -> Option<ColorTarget> {
        self.color
            .map(|c| ColorTarget::new(c, self.color_threshold).expect("validated at parse time"))
    }

    pub fn job(&self) -> FusionJob {
        let mode = match self.mode {
            Mode::Video => FusionMode::Video,
            Mode::Photo => FusionMode::Photo,
        };
        FusionJob {
            mode,
            params: self.params(),
            selective: self.color_target(),
            diagnostics: self.dump_maps,
        }
    }
}

fn parse_bit_depth(s: &str) -> Result<u8, String> {
    match s {
        "8" => Ok(8),
        "16" => Ok(16),
        _ => Err(format!("expected 8 or 16, got {s:?}")),
    }
}

/// Parses `RRGGBB` (optionally `#`-prefixed) into unit RGB.
pub fn parse_hex_color(s: &str) -> Result<[f64; 3], String> {
    let hex = s.strip_prefix('#').unwrap_or(s);
    if hex.len() != 6 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(format!("invalid colour {s:?}, expected RRGGBB"));
    }
    let mut rgb = [0.0; 3];
    for (i, v) in rgb.iter_mut().enumerate() {
        let byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).map_err(|e| e.to_string())?;
        *v = f64::from(byte) / 255.0;
    }
    Ok(rgb)
}

/// Parses and validates arguments (the first item is the program name).
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    let invalid = |msg: String| Args::command().error(ErrorKind::ValueValidation, msg);

    let color = args
        .color
        .as_deref()
        .map(parse_hex_color)
        .transpose()
        .map_err(invalid)?;
    let profile = args.profile.map(TemporalProfile::from).unwrap_or(match args.mode {
        Mode::Video => TemporalProfile::Gaussian,
        Mode::Photo => TemporalProfile::Uniform,
    });
    let config = CliConfig {
        input_pattern: args.input,
        output_dir: args.output,
        mode: args.mode,
        tau: args.tau,
        fps: args.fps,
        alpha_c: args.alpha_c,
        alpha_s: args.alpha_s,
        alpha_e: args.alpha_e,
        alpha_d: args.alpha_d,
        color,
        color_threshold: args.color_threshold,
        depth: args.depth,
        profile,
        bit_depth: args.bit_depth,
        dump_maps: args.dump_maps,
    };
    config
        .params()
        .validate()
        .map_err(|e| invalid(e.to_string()))?;
    if let Some(c) = config.color {
        ColorTarget::new(c, config.color_threshold).map_err(|e| invalid(e.to_string()))?;
    }
    Ok(config)
}
