#![no_main]

use libfuzzer_sys::fuzz_target;
use mixdyn_cli::config::{parse_config, render_config};
use mixdyn_cli::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(entries) = parse_config(text) else {
        return;
    };
    // rendering accepted input and parsing it again gives the same entries
    let again = parse_config(&render_config(&entries)).expect("rendered config parses");
    assert_eq!(
        again.iter().map(|e| (&e.key, &e.value)).collect::<Vec<_>>(),
        entries
            .iter()
            .map(|e| (&e.key, &e.value))
            .collect::<Vec<_>>()
    );
    // any accepted scenario echoes to a config that rebuilds it
    if let Ok(s) = Scenario::build(None, &entries, &[]) {
        let echo = render_config(&s.entries());
        let rebuilt = Scenario::build(None, &parse_config(&echo).expect("echo parses"), &[]);
        assert_eq!(rebuilt.as_ref().ok(), Some(&s));
    }
});
