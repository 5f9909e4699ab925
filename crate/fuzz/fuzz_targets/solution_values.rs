#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use mvsp::instance::{random_instance, GeneratorConfig, Shape};
use mvsp::linearize::{glover_linearize, import_solution, parse_values, MilpModel};
use mvsp::Instance;

fn fixture() -> &'static (Instance, MilpModel) {
    static FIXTURE: OnceLock<(Instance, MilpModel)> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let inst = random_instance(&GeneratorConfig::new(Shape::new(2, 2, 1, 2), 7)).expect("valid");
        let model = glover_linearize(&inst);
        (inst, model)
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_values(text);
    let (inst, model) = fixture();
    let _ = import_solution(inst, model, text);
});
