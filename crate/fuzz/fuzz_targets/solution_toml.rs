#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use mvsp::formulation::io::SolutionDocument;
use mvsp::instance::{random_instance, GeneratorConfig, Shape};
use mvsp::Instance;

fn instance() -> &'static Instance {
    static INSTANCE: OnceLock<Instance> = OnceLock::new();
    INSTANCE.get_or_init(|| random_instance(&GeneratorConfig::new(Shape::new(2, 2, 1, 2), 7)).expect("valid"))
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let inst = instance();
    if let Ok(doc) = SolutionDocument::from_toml(inst, text) {
        let again = SolutionDocument::from_toml(inst, &doc.to_toml(inst)).expect("written solution parses");
        assert!(again.solution.same_decisions(&doc.solution));
    }
});
