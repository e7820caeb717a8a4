//! Running a child process with a wall-clock limit, resource limits and
//! bounded output capture.

use std::io::Read;
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::process::{Child, Command, Stdio};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub wall: Duration,
    /// Address-space cap in bytes; 0 leaves it unset.
    pub address_space: u64,
    pub cpu_secs: u64,
    pub file_size: u64,
    /// Try to detach the child from the network.
    pub isolate_network: bool,
}

#[derive(Debug)]
pub struct Finished {
    pub exit_code: Option<i32>,
    pub signal: Option<i32>,
    pub timed_out: bool,
    pub stdout: String,
    pub stderr: String,
    pub elapsed: Duration,
}

impl Finished {
    pub fn success(&self) -> bool {
        !self.timed_out && self.exit_code == Some(0)
    }
}

fn set_limit(resource: libc::__rlimit_resource_t, value: u64) {
    let lim = libc::rlimit {
        rlim_cur: value,
        rlim_max: value,
    };
    // SAFETY: plain syscall on a stack value.
    unsafe {
        libc::setrlimit(resource, &lim);
    }
}

fn reader(mut src: impl Read + Send + 'static, cap: usize) -> JoinHandle<Vec<u8>> {
    std::thread::spawn(move || {
        let mut kept = Vec::new();
        let mut buf = [0u8; 8192];
        // Keep draining past the cap so the child never blocks on a full pipe.
        while let Ok(n) = src.read(&mut buf) {
            if n == 0 {
                break;
            }
            let room = cap.saturating_sub(kept.len());
            kept.extend_from_slice(&buf[..n.min(room)]);
        }
        kept
    })
}

fn kill_group(child: &Child) {
    // SAFETY: the child leads its own process group (setpgid in pre_exec).
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
}

/// Runs `cmd` in its own process group. On timeout the whole group is killed.
pub fn run(mut cmd: Command, limits: Limits, output_cap: usize) -> std::io::Result<Finished> {
    cmd.stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
    // SAFETY: only async-signal-safe calls between fork and exec.
    unsafe {
        cmd.pre_exec(move || {
            libc::setpgid(0, 0);
            if limits.address_space > 0 {
                set_limit(libc::RLIMIT_AS, limits.address_space);
            }
            if limits.cpu_secs > 0 {
                set_limit(libc::RLIMIT_CPU, limits.cpu_secs);
            }
            if limits.file_size > 0 {
                set_limit(libc::RLIMIT_FSIZE, limits.file_size);
            }
            set_limit(libc::RLIMIT_CORE, 0);
            if limits.isolate_network {
                // Needs privileges or user namespaces; failure leaves the
                // child with the host network.
                libc::unshare(libc::CLONE_NEWNET);
            }
            Ok(())
        });
    }
    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let out = reader(child.stdout.take().expect("piped stdout"), output_cap);
    let err = reader(child.stderr.take().expect("piped stderr"), output_cap);
    let deadline = start + limits.wall;
    let mut timed_out = false;
    let status = loop {
        if let Some(s) = child.try_wait()? {
            break s;
        }
        if Instant::now() >= deadline {
            timed_out = true;
            kill_group(&child);
            break child.wait()?;
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let elapsed = start.elapsed();
    // Stray group members could still hold the pipes open.
    kill_group(&child);
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    Ok(Finished {
        exit_code: status.code(),
        signal: status.signal(),
        timed_out,
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
        elapsed,
    })
}

pub fn signal_name(sig: i32) -> &'static str {
    match sig {
        libc::SIGSEGV => "Segmentation fault",
        libc::SIGABRT => "Aborted",
        libc::SIGFPE => "Floating point exception",
        libc::SIGBUS => "Bus error",
        libc::SIGILL => "Illegal instruction",
        libc::SIGKILL => "Killed",
        libc::SIGXCPU => "CPU time limit exceeded",
        libc::SIGXFSZ => "File size limit exceeded",
        libc::SIGTRAP => "Trace/breakpoint trap",
        _ => "Terminated",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits(secs: u64) -> Limits {
        Limits {
            wall: Duration::from_secs(secs),
            address_space: 0,
            cpu_secs: 0,
            file_size: 0,
            isolate_network: false,
        }
    }

    #[test]
    fn captures_output_and_status() {
        let mut c = Command::new("sh");
        c.args(["-c", "echo out; echo err >&2; exit 3"]);
        let f = run(c, limits(5), 1024).unwrap();
        assert_eq!(f.stdout, "out\n");
        assert_eq!(f.stderr, "err\n");
        assert_eq!(f.exit_code, Some(3));
        assert!(!f.timed_out);
    }

    #[test]
    fn kills_whole_group_on_timeout() {
        let mut c = Command::new("sh");
        c.args(["-c", "sleep 30 & sleep 30"]);
        let start = Instant::now();
        let f = run(c, limits(1), 1024).unwrap();
        assert!(f.timed_out);
        assert!(start.elapsed() < Duration::from_secs(3));
    }

    #[test]
    fn output_is_capped() {
        let mut c = Command::new("sh");
        c.args(["-c", "yes | head -c 100000"]);
        let f = run(c, limits(5), 100).unwrap();
        assert_eq!(f.stdout.len(), 100);
        assert_eq!(f.exit_code, Some(0));
    }
}
