//! Sectioned configuration text: parsing, overrides, canonical output and
//! the stable hash recorded in run manifests.

use tircf::io::{config_hash, override_key, parse_config, serialize_config};

fn main() -> tircf::Result<()> {
    let cfg = parse_config("learning_rate = 0.03\n\n[gesr]\nm = 0.5\n\n[epsr]\nmax_iters = 50\n")?;
    println!("learning_rate {}  gesr.m {}  epsr.max_iters {}", cfg.learning_rate, cfg.gesr.m, cfg.epsr.max_iters);

    let swept = override_key(&cfg, "gesr.m", toml::Value::Float(0.7))?;
    println!("after override gesr.m = {}", swept.gesr.m);
    println!("hash {}", config_hash(&cfg)?);

    match parse_config("[astf]\nalpha9 = 0.1\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("unknown keys are errors"),
    }
    print!("{}", serialize_config(&swept)?);
    Ok(())
}
