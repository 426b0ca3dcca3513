fn main() {
    // Die quietly when stdout is a pipe that closes early, like cat or grep.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(escapelab_cli::run_command(&argv));
}
