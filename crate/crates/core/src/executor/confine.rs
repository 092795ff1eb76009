//! OS-level confinement for guest processes (Linux).
//!
//! Everything that allocates or can fail noisily happens in the parent before
//! `fork`. The child then only makes raw system calls in `pre_exec`:
//!
//! * its own process group, so a timeout kills every descendant;
//! * resource limits on address space, CPU time, file size and core dumps;
//! * `no_new_privs`, then a Landlock ruleset that allows reading the system
//!   library trees and the interpreter prefix, and full access to the working
//!   directory only (TCP bind/connect are denied too where the kernel supports
//!   network rules);
//! * a seccomp filter that fails `socket()` for every family except
//!   `AF_UNIX` and blocks `io_uring_setup`.

use std::io;
use std::os::fd::{AsRawFd, FromRawFd, OwnedFd};
use std::os::unix::ffi::OsStrExt;
use std::path::{Path, PathBuf};

/// Paths that stay readable inside the sandbox besides the interpreter prefix.
const READ_ONLY_ROOTS: &[&str] = &["/usr", "/lib", "/lib64", "/lib32", "/bin", "/sbin", "/etc/ld.so.cache"];

// Landlock filesystem rights.
const FS_EXECUTE: u64 = 1 << 0;
const FS_WRITE_FILE: u64 = 1 << 1;
const FS_READ_FILE: u64 = 1 << 2;
const FS_READ_DIR: u64 = 1 << 3;
const FS_REFER: u64 = 1 << 13;
const FS_TRUNCATE: u64 = 1 << 14;
const FS_IOCTL_DEV: u64 = 1 << 15;
const NET_BIND_TCP: u64 = 1 << 0;
const NET_CONNECT_TCP: u64 = 1 << 1;
const SCOPE_ABSTRACT_UNIX_SOCKET: u64 = 1 << 0;
const SCOPE_SIGNAL: u64 = 1 << 1;
const RULE_PATH_BENEATH: libc::c_int = 1;
const CREATE_RULESET_VERSION: u32 = 1 << 0;

#[cfg(target_arch = "x86_64")]
mod sys {
    pub const LANDLOCK_CREATE_RULESET: libc::c_long = 444;
    pub const LANDLOCK_ADD_RULE: libc::c_long = 445;
    pub const LANDLOCK_RESTRICT_SELF: libc::c_long = 446;
    pub const AUDIT_ARCH: u32 = 0xC000_003E;
    pub const NR_SOCKET: u32 = 41;
    pub const NR_IO_URING_SETUP: u32 = 425;
    /// Syscall numbers at or above this belong to the x32 ABI.
    pub const X32_BIT: Option<u32> = Some(0x4000_0000);
}

#[cfg(target_arch = "aarch64")]
mod sys {
    pub const LANDLOCK_CREATE_RULESET: libc::c_long = 444;
    pub const LANDLOCK_ADD_RULE: libc::c_long = 445;
    pub const LANDLOCK_RESTRICT_SELF: libc::c_long = 446;
    pub const AUDIT_ARCH: u32 = 0xC000_00B7;
    pub const NR_SOCKET: u32 = 198;
    pub const NR_IO_URING_SETUP: u32 = 425;
    pub const X32_BIT: Option<u32> = None;
}

#[repr(C)]
struct RulesetAttr {
    handled_access_fs: u64,
    handled_access_net: u64,
    scoped: u64,
}

#[repr(C, packed)]
struct PathBeneathAttr {
    allowed_access: u64,
    parent_fd: i32,
}

#[repr(C)]
#[derive(Clone, Copy)]
struct SockFilter {
    code: u16,
    jt: u8,
    jf: u8,
    k: u32,
}

#[repr(C)]
struct SockFprog {
    len: u16,
    filter: *const SockFilter,
}

/// Resource limits applied in the child.
#[derive(Debug, Clone, Copy)]
pub struct Rlimits {
    pub address_space: u64,
    pub cpu_seconds: u64,
    pub file_size: u64,
}

/// Confinement prepared in the parent, applied in the child.
pub struct Confinement {
    ruleset: Option<OwnedFd>,
    filter: Vec<SockFilter>,
    rlimits: Rlimits,
}

/// Landlock ABI version, or `None` when the kernel lacks Landlock.
pub fn landlock_abi() -> Option<i64> {
    // SAFETY: version query with a null attribute pointer, as documented.
    let v = unsafe {
        libc::syscall(
            sys::LANDLOCK_CREATE_RULESET,
            std::ptr::null::<RulesetAttr>(),
            0usize,
            CREATE_RULESET_VERSION,
        )
    };
    (v > 0).then_some(v)
}

fn open_path(path: &Path) -> io::Result<OwnedFd> {
    let c = std::ffi::CString::new(path.as_os_str().as_bytes())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "path contains NUL"))?;
    // SAFETY: valid NUL-terminated string; the returned fd is owned below.
    let fd = unsafe { libc::open(c.as_ptr(), libc::O_PATH | libc::O_CLOEXEC) };
    if fd < 0 {
        return Err(io::Error::last_os_error());
    }
    // SAFETY: fd is a fresh descriptor we own.
    Ok(unsafe { OwnedFd::from_raw_fd(fd) })
}

fn add_rule(ruleset: &OwnedFd, path: &Path, access: u64) -> io::Result<()> {
    let target = match open_path(path) {
        Ok(fd) => fd,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(e),
    };
    let attr = PathBeneathAttr {
        allowed_access: access,
        parent_fd: target.as_raw_fd(),
    };
    // SAFETY: attr is a valid path-beneath attribute for the duration of the call.
    let rc = unsafe {
        libc::syscall(
            sys::LANDLOCK_ADD_RULE,
            ruleset.as_raw_fd(),
            RULE_PATH_BENEATH,
            &attr as *const PathBeneathAttr,
            0u32,
        )
    };
    if rc != 0 {
        return Err(io::Error::last_os_error());
    }
    Ok(())
}

fn build_ruleset(abi: i64, workdir: &Path, extra_read: &[PathBuf]) -> io::Result<OwnedFd> {
    let mut fs = (1u64 << 13) - 1; // ABI 1 rights
    if abi >= 2 {
        fs |= FS_REFER;
    }
    if abi >= 3 {
        fs |= FS_TRUNCATE;
    }
    if abi >= 5 {
        fs |= FS_IOCTL_DEV;
    }
    let net = if abi >= 4 { NET_BIND_TCP | NET_CONNECT_TCP } else { 0 };
    let scoped = if abi >= 6 { SCOPE_ABSTRACT_UNIX_SOCKET | SCOPE_SIGNAL } else { 0 };
    let attr = RulesetAttr {
        handled_access_fs: fs,
        handled_access_net: net,
        scoped,
    };
    let size = match abi {
        1..=3 => 8,
        4 | 5 => 16,
        _ => std::mem::size_of::<RulesetAttr>(),
    };
    // SAFETY: attr is valid for `size` bytes.
    let fd = unsafe { libc::syscall(sys::LANDLOCK_CREATE_RULESET, &attr as *const RulesetAttr, size, 0u32) };
    if fd < 0 {
        return Err(io::Error::last_os_error());
    }
    // SAFETY: fresh descriptor owned by us.
    let ruleset = unsafe { OwnedFd::from_raw_fd(fd as i32) };
    let read_only = FS_EXECUTE | FS_READ_FILE | FS_READ_DIR;
    for root in READ_ONLY_ROOTS {
        let path = Path::new(root);
        let access = if path.is_dir() { read_only } else { FS_READ_FILE };
        add_rule(&ruleset, path, access)?;
    }
    for path in extra_read {
        let access = if path.is_dir() { read_only } else { FS_READ_FILE | FS_EXECUTE };
        add_rule(&ruleset, path, access)?;
    }
    add_rule(&ruleset, Path::new("/dev/null"), FS_READ_FILE | FS_WRITE_FILE)?;
    add_rule(&ruleset, Path::new("/dev/urandom"), FS_READ_FILE)?;
    add_rule(&ruleset, workdir, fs)?;
    Ok(ruleset)
}

const BPF_LD_W_ABS: u16 = 0x20;
const BPF_JEQ_K: u16 = 0x15;
const BPF_JGE_K: u16 = 0x35;
const BPF_RET_K: u16 = 0x06;
const SECCOMP_RET_ALLOW: u32 = 0x7fff_0000;
const SECCOMP_RET_ERRNO: u32 = 0x0005_0000;
const SECCOMP_RET_KILL_PROCESS: u32 = 0x8000_0000;
// Offsets into `struct seccomp_data`.
const OFF_NR: u32 = 0;
const OFF_ARCH: u32 = 4;
const OFF_ARG0_LO: u32 = 16;

fn stmt(code: u16, k: u32) -> SockFilter {
    SockFilter { code, jt: 0, jf: 0, k }
}

fn jump(code: u16, k: u32, jt: u8, jf: u8) -> SockFilter {
    SockFilter { code, jt, jf, k }
}

fn socket_filter() -> Vec<SockFilter> {
    let eacces = SECCOMP_RET_ERRNO | libc::EACCES as u32;
    let mut f = vec![
        stmt(BPF_LD_W_ABS, OFF_ARCH),
        jump(BPF_JEQ_K, sys::AUDIT_ARCH, 1, 0),
        stmt(BPF_RET_K, SECCOMP_RET_KILL_PROCESS),
        stmt(BPF_LD_W_ABS, OFF_NR),
    ];
    if let Some(bit) = sys::X32_BIT {
        f.push(jump(BPF_JGE_K, bit, 0, 1));
        f.push(stmt(BPF_RET_K, SECCOMP_RET_KILL_PROCESS));
    }
    f.extend([
        jump(BPF_JEQ_K, sys::NR_IO_URING_SETUP, 0, 1),
        stmt(BPF_RET_K, SECCOMP_RET_ERRNO | libc::ENOSYS as u32),
        jump(BPF_JEQ_K, sys::NR_SOCKET, 0, 3),
        stmt(BPF_LD_W_ABS, OFF_ARG0_LO),
        jump(BPF_JEQ_K, libc::AF_UNIX as u32, 1, 0),
        stmt(BPF_RET_K, eacces),
        stmt(BPF_RET_K, SECCOMP_RET_ALLOW),
    ]);
    f
}

impl Confinement {
    /// Prepares confinement for a guest confined to `workdir`.
    ///
    /// Fails when the kernel cannot enforce filesystem isolation, unless
    /// `require_landlock` is false.
    pub fn prepare(workdir: &Path, extra_read: &[PathBuf], rlimits: Rlimits, require_landlock: bool) -> io::Result<Self> {
        let ruleset = match landlock_abi() {
            Some(abi) => Some(build_ruleset(abi, workdir, extra_read)?),
            None if require_landlock => {
                return Err(io::Error::new(
                    io::ErrorKind::Unsupported,
                    "kernel does not support Landlock filesystem confinement",
                ))
            }
            None => None,
        };
        Ok(Self {
            ruleset,
            filter: socket_filter(),
            rlimits,
        })
    }

    /// Applies the confinement to the calling process.
    ///
    /// # Safety
    /// Must only be called in a freshly forked child before `exec`. It makes
    /// async-signal-safe system calls only and does not allocate.
    pub unsafe fn apply_in_child(&self) -> io::Result<()> {
        fn check(rc: libc::c_long) -> io::Result<()> {
            if rc < 0 {
                Err(io::Error::last_os_error())
            } else {
                Ok(())
            }
        }
        check(libc::setpgid(0, 0) as libc::c_long)?;
        let limit = |resource, value: u64| {
            let lim = libc::rlimit {
                rlim_cur: value as libc::rlim_t,
                rlim_max: value as libc::rlim_t,
            };
            check(libc::setrlimit(resource, &lim) as libc::c_long)
        };
        limit(libc::RLIMIT_AS, self.rlimits.address_space)?;
        limit(libc::RLIMIT_CPU, self.rlimits.cpu_seconds)?;
        limit(libc::RLIMIT_FSIZE, self.rlimits.file_size)?;
        limit(libc::RLIMIT_CORE, 0)?;
        check(libc::prctl(libc::PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) as libc::c_long)?;
        if let Some(ruleset) = &self.ruleset {
            check(libc::syscall(sys::LANDLOCK_RESTRICT_SELF, ruleset.as_raw_fd(), 0u32))?;
        }
        let prog = SockFprog {
            len: self.filter.len() as u16,
            filter: self.filter.as_ptr(),
        };
        check(libc::prctl(
            libc::PR_SET_SECCOMP,
            libc::SECCOMP_MODE_FILTER as libc::c_ulong,
            &prog as *const SockFprog as libc::c_ulong,
            0,
            0,
        ) as libc::c_long)?;
        Ok(())
    }
}

/// Sends SIGKILL to every process in the group led by `pid`.
pub fn kill_group(pid: u32) {
    // SAFETY: plain kill(2); a vanished group yields ESRCH, which is fine.
    unsafe {
        libc::kill(-(pid as libc::pid_t), libc::SIGKILL);
    }
}
