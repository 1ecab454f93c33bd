mod common;

use common::*;
use mlc::refint::RefMode;

#[test]
fn constant_and_arithmetic() {
    let mut d = deploy(
        "let public k () : uint256 = 42
         let public f (a : uint256) (b : uint256) : uint256 = (a - b) * 2 + a / b
         let public s (a : int64) (b : int64) : int64 = a / b - a % b",
    );
    let r = d.call("k", &[]);
    assert_eq!(r.outcome.return_word(), Some(w(42)), "{r:?}");
    let r = d.call("f", &[w(10), w(3)]);
    assert_eq!(r.outcome.return_word(), Some(w(17)));
    let r = d.call("s", &[mlc_word(-7), w(2)]);
    assert_eq!(r.outcome.return_word(), Some(mlc_word(-2)));
}

fn mlc_word(v: i64) -> bemp_evm::Word {
    bemp_evm::word::from_bigint(&num_bigint::BigInt::from(v))
}

#[test]
fn lists_maps_and_refint_agree() {
    let src = "
        type l = Nil | Cons uint256 l
        map m : uint64 => uint256
        global g = { total : uint256 }
        exception Big
        let rec private mk (i : uint256) : l = if i = 0 then Nil else Cons 0x42 (mk (i - 1))
        let rec private len (x : l) : uint256 = match x with | Nil -> 0 | Cons _ t -> 1 + len t end
        let public run (i : uint256) : uint256 =
          if i > 30 then raise Big;
          let n = len (mk i) in
          m[3] <- n; m[4] <- n + 1; m[3] <- 7;
          g.total <- g.total + size m;
          n + m[4]
    ";
    let mut d = deploy(src);
    for i in [0u64, 1, 5, 31] {
        let t = tx("run", &[w(i)]);
        let mut rw = d.world.clone();
        let reference = d.reference(&mut rw, &t, RefMode::SpecCheck);
        let r = d.run(&t);
        assert_eq!(Some(r.outcome.clone()), reference.outcome.to_evm(), "i={i}\n{}", d.art.asm());
        assert_eq!(r.storage_delta, reference.storage_delta);
        assert_eq!(d.world, rw);
    }
}
