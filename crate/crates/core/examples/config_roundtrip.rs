//! Print the default config in the flat `key = value` format and parse it back.
//!
//! cargo run --example config_roundtrip > default.cfg

use nsarb::config::RunConfig;

fn main() -> nsarb::Result<()> {
    let cfg = RunConfig::default();
    let text = cfg.to_kv();
    assert_eq!(RunConfig::parse_kv(&text)?, cfg);
    print!("{text}");
    Ok(())
}
