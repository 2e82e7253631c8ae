use std::process::Command;

fn main() {
    println!("cargo:rerun-if-env-changed=PERCLAB_BUILD_ID");
    println!("cargo:rerun-if-changed=../../.git/HEAD");
    println!("cargo:rerun-if-changed=../../.git/index");
    let id = std::env::var("PERCLAB_BUILD_ID").ok().or_else(|| {
        let out = Command::new("git").args(["describe", "--always", "--dirty", "--tags"]).output().ok()?;
        out.status.success().then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
    });
    let id = id.filter(|s| !s.is_empty()).unwrap_or_else(|| "unknown".into());
    println!("cargo:rustc-env=PERCLAB_BUILD_ID={id}");
}
