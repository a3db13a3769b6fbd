#[test]
fn debug_equilibrium() {
    use stefan_cascade::domain::*;
    use stefan_cascade::fronttrack;
    use stefan_cascade::equilibrium::*;
    let h = 2e-3;
    let eps = 1e-3;
    let spec = ScenarioSpec {
        gamma: 1.0, dimension: 2,
        u: Supercooling::Constant { value: 0.0 },
        initial_region: RegionSpec::HalfLine { threshold: 0.0 },
        v0: SpeedSpec::Constant { value: 1.0 },
        cap: None,
    };
    let g = Grid2::covering([-0.02, 0.0, 1.05, 0.08], h).unwrap();
    let r = fronttrack::run(&spec, &g, eps).unwrap();
    let st = build_from_solution(&r.field, &spec, eps,
        &SolutionSources { lock_events: &r.ledger.lock_events, capped: false },
        &BuildOptions { n_paths: 20000, seed: 7 }).unwrap();
    println!("kappa={} total_mass={} trapped={}", st.kappa, st.total_mass, st.trapped_mass);
    // x-profile of kq (mid rows)
    for xp in [0.05, 0.2, 0.5, 0.8, 0.95] {
        let mut acc = 0.0; let mut cnt = 0;
        for j in g.ny/4..3*g.ny/4 {
            for i in 0..g.nx {
                let c = g.center(i, j);
                if (c[0]-xp).abs() < 2.0*h { acc += st.q.get(i,j); cnt += 1; }
            }
        }
        println!("kq({xp}) = {:.4} expect {:.4}", acc/cnt as f64, 2.001 - xp);
    }
    // residual location
    let mut worst = (0.0f64, 0, 0);
    for j in 1..g.ny-1 { for i in 1..g.nx-1 {
        let k = j*g.nx + i;
        let kq = st.q.values[k];
        if kq <= 1.05 { continue; }
        let l = st.cost.field.values[k];
        if l <= 0.0 { continue; }
        let fit = 1.0/(kq - 1.0);
        let res = (l - fit).abs()/(l.abs()+1.0);
        if res > worst.0 { worst = (res, i, j); }
    }}
    let c = g.center(worst.1, worst.2);
    let k = worst.2*g.nx + worst.1;
    println!("worst residual {:.3} at ({:.4},{:.4}) kq={:.3} L={:.3} w={:.4}",
        worst.0, c[0], c[1], st.q.values[k], st.cost.field.values[k], r.field.w.values[k]);
}
