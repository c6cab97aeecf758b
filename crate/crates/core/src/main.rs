use std::process::ExitCode;

fn main() -> ExitCode {
    aoi_sched::cli::run()
}
