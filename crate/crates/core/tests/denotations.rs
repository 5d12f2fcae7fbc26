use hogsos::behavior::StepTag;
use hogsos::gitrees::{classify_unit, Denotation, UnitShape};
use hogsos::harness::mutations;
use hogsos::engine::DenotationalModel;
use hogsos::kernel::Sort;
use hogsos::lang::{language, LangId};

#[test]
fn unit_shapes() {
    let l = language(LangId::Xtcl);
    let den = l.denotational();
    let shape = |src: &str| classify_unit(den.as_ref(), &den.denote(&l.parse(src).unwrap()).unwrap(), 100).unwrap();
    let halts = |steps| UnitShape::Halts { steps, observation: StepTag::Terminal };
    assert_eq!(shape("e"), halts(0));
    assert_eq!(shape("I e"), halts(1));
    assert_eq!(shape("S K K e"), halts(5));
    assert_eq!(
        classify_unit(den.as_ref(), &Denotation::divergent(Sort::unit()), 100).unwrap(),
        UnitShape::Divergent { fuel: 100 }
    );
}

#[test]
fn looping_rule_gives_divergent_denotation() {
    let mu = mutations(LangId::Xtcl).iter().find(|m| m.id == "e-loops").unwrap();
    let den = DenotationalModel::new(mu.law(LangId::Xtcl).unwrap()).unwrap();
    let e = language(LangId::Xtcl).parse("e").unwrap();
    assert_eq!(classify_unit(den.as_ref(), &den.denote(&e).unwrap(), 100).unwrap(), UnitShape::Divergent { fuel: 100 });
}

#[test]
fn untyped_omega_diverges() {
    let l = language(LangId::Xcl);
    let den = l.denotational();
    let omega = den.denote(&l.parse("S I I (S I I)").unwrap()).unwrap();
    assert!(matches!(classify_unit(den.as_ref(), &omega, 100).unwrap(), UnitShape::Divergent { .. }));
}
