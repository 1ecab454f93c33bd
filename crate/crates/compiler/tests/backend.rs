mod common;

use bemp_evm::opcode::{JUMP, JUMPDEST, MSTORE, REVERT, SWAP1};
use bemp_evm::asm::min_push_width;
use bemp_evm::{word, Instr, Word};
use common::*;
use mlc::backend::{compile_program, CodegenOptions};

const SRC: &str = "
type intlist = Nil | Cons uint256 intlist
exception Bad
let private k () : uint256 = 42
let public r (x : uint256) : uint256 = if x > 3 then raise Bad else x
let private one () : uint256 = match Cons 0x42 Nil with | Nil -> (0 : uint256) | Cons h _ -> h end
let private two () : uint256 = match Cons 0x42 (Cons 0x43 Nil) with | Nil -> (0 : uint256) | Cons h _ -> h end
let private bump [@gas_checking] (x : uint256) : uint256 = add_gas 100 0; x + 1
";

fn body(d: &Deployed, name: &str) -> Vec<Instr> {
    let f = d.art.sized.function(name).unwrap();
    d.art.sized.instrs.iter().filter(|(o, _)| (f.start..f.end).contains(o)).map(|(_, i)| i.clone()).collect()
}

#[test]
fn constant_function_is_a_push_and_the_return_scaffold() {
    let d = deploy(SRC);
    assert_eq!(body(&d, "k"), vec![Instr::op(JUMPDEST), Instr::push_u64(42), Instr::op(SWAP1), Instr::op(JUMP)]);
}

#[test]
fn raise_is_a_tagged_revert() {
    let d = deploy(SRC);
    let code = body(&d, "r");
    let expected = [
        Instr::push(word::tag_word("Bad")),
        Instr::push_u64(0),
        Instr::op(MSTORE),
        Instr::push_u64(4),
        Instr::push_u64(0),
        Instr::op(REVERT),
    ];
    assert!(code.windows(expected.len()).any(|w| w == expected), "{}", d.art.asm());

    let mut d = deploy(SRC);
    let out = d.call("r", &[w(9)]).outcome;
    assert_eq!(out.revert_tag(), Some(word::tag4("Bad")));
    assert_eq!(d.call("r", &[w(2)]).outcome.return_word(), Some(w(2)));
}

#[test]
fn cons_allocates_three_words() {
    let mut d = deploy(SRC);
    assert!(d.art.sized.alloc_sites.iter().any(|(_, n)| *n == 96));
    let r = d.call("one", &[]);
    assert_eq!(r.outcome.return_word(), Some(w(0x42)));
    // A second cell grows the heap by one tag word plus two fields.
    let r2 = d.call("two", &[]);
    assert_eq!(r2.outcome.return_word(), Some(w(0x42)));
    assert_eq!(r2.memory_high_water - r.memory_high_water, 96);
}

#[test]
fn artifacts_are_deterministic_and_well_formed() {
    let a = deploy(SRC).art;
    let b = deploy(SRC).art;
    assert_eq!((a.hex(), a.asm(), a.gasmap()), (b.hex(), b.asm(), b.gasmap()));
    let hex = a.hex();
    assert!(hex.ends_with('\n') && !hex.starts_with("0x"));
    assert!(hex.trim_end().chars().all(|c| c.is_ascii_digit() || ('a'..='f').contains(&c)));
    assert_eq!(hex::decode(hex.trim_end()).unwrap(), a.code);
    assert!(a.asm().lines().any(|l| l == "Lk:"));
    let site = &a.sized.annotations[0];
    let map = a.gasmap();
    assert_eq!(map.lines().next(), Some("# offset used alloc"));
    assert!(map.lines().any(|l| l == format!("{:04x} 100 0", site.offset)), "{map}");
}

#[test]
fn private_functions_are_hidden_unless_exposed() {
    let p = mlc::compile_source(SRC).unwrap();
    let hidden = compile_program(&p, CodegenOptions::default()).unwrap();
    let shown = compile_program(&p, CodegenOptions { expose_private: true }).unwrap();
    let names = |a: &mlc::backend::Artifacts| a.selectors.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    assert_eq!(names(&hidden), vec!["r"]);
    assert!(names(&shown).contains(&"k".to_string()) && names(&shown).contains(&"bump".to_string()));
}

#[test]
fn fixpoint_iterations_are_bounded_by_label_pushes() {
    for opts in [CodegenOptions::default(), CodegenOptions { expose_private: true }] {
        let p = mlc::compile_source(SRC).unwrap();
        let a = compile_program(&p, opts).unwrap();
        assert!(a.sized.iterations <= a.sized.push_widths.len() + 1);
        // Every label push ends at the narrowest width holding its target.
        let code_width = min_push_width(Word::from(a.sized.code_size()));
        assert!(a.sized.push_widths.iter().all(|w| *w <= code_width));
    }
}
