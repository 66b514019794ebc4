use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = match tempofuse::parse_args(std::env::args_os()) {
        Ok(config) => config,
        // Exits 2 on usage errors, 0 for --help/--version.
        Err(e) => e.exit(),
    };
    match tempofuse::run(&config) {
        Ok(summary) => {
            log::info!(
                "done: {} frames in, {} files out",
                summary.frames,
                summary.outputs.len()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
