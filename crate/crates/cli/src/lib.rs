//! Command-line front end: frame ingestion, output encoding and job
//! orchestration around `tempofuse-core`.

pub mod args;
pub mod codec;
pub mod diagnostics;

use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info};
use tempofuse_core::fusion::photo_virtual_exposure;
use tempofuse_core::{run_photo, run_video, FusedFrame};

pub use args::{parse_args, CliConfig, Mode};
pub use codec::{decode_frame, load_frames, write_frame};
pub use diagnostics::dump_diagnostics;

/// File name of the single photo-mode output.
pub const PHOTO_OUTPUT: &str = "blend.png";
/// Subdirectory of the output receiving `--dump-maps` files.
pub const MAPS_DIR: &str = "maps";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("no input frames match {0:?}")]
    NoInputs(String),
    #[error("bad input pattern {pattern:?}: {reason}")]
    Pattern { pattern: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot decode {}: {source}", path.display())]
    Decode {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("cannot encode {}: {source}", path.display())]
    Encode {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error(
        "{} is {}x{}, expected {}x{} like the first frame",
        path.display(), actual.0, actual.1, expected.0, expected.1
    )]
    Dimensions {
        path: PathBuf,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("{}: {source}", path.display())]
    Frame {
        path: PathBuf,
        source: tempofuse_core::Error,
    },
    #[error("unsupported bit depth {0}, expected 8 or 16")]
    BitDepth(u8),
    #[error(transparent)]
    Fusion(#[from] tempofuse_core::Error),
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub frames: usize,
    pub outputs: Vec<PathBuf>,
    /// Virtual exposure time in seconds; approximate in photo mode.
    pub virtual_exposure: f64,
}

/// Video output name for the blend ending at input frame `index`.
pub fn video_output_name(index: usize) -> String {
    format!("R_{index:06}.png")
}

fn emit(fused: &FusedFrame, path: &Path, config: &CliConfig) -> Result<(), CliError> {
    write_frame(&fused.image, path, config.bit_depth)?;
    if let Some(diag) = &fused.diagnostics {
        let maps = config.output_dir.join(MAPS_DIR);
        let written = dump_diagnostics(diag, &maps)?;
        debug!("frame {}: {} diagnostic maps", fused.index, written.len());
    }
    Ok(())
}

/// Executes a validated configuration end to end.
pub fn run(config: &CliConfig) -> Result<RunSummary, CliError> {
    let inputs = codec::resolve_inputs(&config.input_pattern)?;
    let frames = inputs.len();
    info!("{frames} input frames from {}", config.input_pattern);
    let mkdir = |dir: &Path| {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })
    };
    mkdir(&config.output_dir)?;
    if config.dump_maps {
        mkdir(&config.output_dir.join(MAPS_DIR))?;
    }

    let job = config.job();
    let source = codec::FrameSource::new(inputs);
    let mut outputs = Vec::new();
    let virtual_exposure = match config.mode {
        Mode::Video => {
            run_video(&job, source, |fused| {
                let path = config.output_dir.join(video_output_name(fused.index));
                emit(&fused, &path, config)?;
                info!("wrote {} ({}/{frames})", path.display(), fused.index + 1);
                outputs.push(path);
                Ok(())
            })?;
            let vet = tempofuse_core::virtual_exposure_time(config.tau, config.fps);
            info!("virtual exposure time {vet:.4} s per output");
            vet
        }
        Mode::Photo => {
            let fused = run_photo(&job, source)?;
            let path = config.output_dir.join(PHOTO_OUTPUT);
            emit(&fused, &path, config)?;
            info!("wrote {}", path.display());
            outputs.push(path);
            let vet = photo_virtual_exposure(frames, 1.0 / config.fps);
            info!("virtual exposure time approximately {vet:.4} s");
            vet
        }
    };
    Ok(RunSummary {
        frames,
        outputs,
        virtual_exposure,
    })
}
