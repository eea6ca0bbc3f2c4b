use bvpm_suite::{default_context, run, CRITERIA};

fn main() {
    let ctx = default_context().expect("default grid");
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, _, _) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let o = run(&ctx, id).expect("known criterion");
        println!("{}", o.line());
        for c in &o.checks {
            println!("    {} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value);
        }
        failed += usize::from(!o.pass);
    }
    println!("{failed} criteria failed");
}
