//! Shared helpers for driving the `kews` binary in tests.

use std::path::Path;
use std::process::{Command, Output};

pub fn kews(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kews"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

pub fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "command failed ({:?}):\n{}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Synthetic bundle spec covering several domains: two shape families under
/// `node` plus singleton/tiny chunks elsewhere. `theta3_scale` inflates the
/// weak-domain KPIs (chaos perturbation); `seed_offset` decorrelates noise.
pub fn demo_bundle_spec(seed_offset: u64, theta3_scale_weak: f64) -> serde_json::Value {
    let mut kpis = Vec::new();
    let mut push = |id: &str,
                    domain: &str,
                    service: Option<&str>,
                    cumulative: bool,
                    theta2: f64,
                    theta3: f64,
                    period: u64,
                    seed: u64| {
        kpis.push(serde_json::json!({
            "id": id,
            "domain": domain,
            "service": service,
            "cumulative": cumulative,
            "spec": {
                "theta1": 1.0,
                "theta2": theta2,
                "theta3": theta3,
                "length": 256,
                "period": period,
                "noise_sigma": 0.05,
                "seed": seed + seed_offset,
            }
        }));
    };

    let weak = theta3_scale_weak;
    push("grpc_frontend_requests", "grpc", Some("frontend"), false, 1.0, 1.0, 32, 1);
    push("grpc_cart_requests", "grpc", Some("cart"), false, 1.2, 1.5, 32, 2);
    push("istio_frontend_bytes", "istio", Some("frontend"), false, 0.8, 2.0, 32, 3);
    push("http_gateway_errors", "http", None, false, 1.0, weak, 32, 4);
    push("container_cpu_seconds", "container", None, true, 1.0, weak * 1.5, 32, 5);
    push("container_memory_bytes", "container", None, false, 0.5, weak * 3.0, 64, 6);
    for i in 0..5 {
        push(
            &format!("node_cpu_{i}"),
            "node",
            None,
            false,
            1.0,
            weak,
            16,
            10 + i,
        );
    }
    for i in 0..5 {
        push(
            &format!("node_disk_{i}"),
            "node",
            None,
            false,
            1.0,
            weak,
            64,
            20 + i,
        );
    }
    serde_json::json!({ "kpis": kpis })
}
