#![no_main]

use fpk_core::exprlang::{parse, Compiled, ParseError, Var};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(e) = parse(src) else { return };
    // printing and reparsing gives the same tree; parentheses added by the
    // printer may push a deep input over the nesting limit
    match parse(&e.to_string()) {
        Ok(again) => assert_eq!(again, e),
        Err(ParseError::TooDeep { .. }) => {}
        Err(err) => panic!("printed expression does not reparse: {err}"),
    }
    let _ = Compiled::new(&e).eval(&[0.5, -0.25, 1.0], 0.5);
    if e.node_count() < 200 {
        let _ = e.differentiate(Var::X(0));
    }
});
