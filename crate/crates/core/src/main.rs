fn main() {
    let report = raloop::cli::run(std::env::args_os());
    print!("{report}");
    eprintln!("command={} status={} elapsed_ms={}", report.command, report.status as i32, report.elapsed_ms);
    std::process::exit(report.status as i32);
}
