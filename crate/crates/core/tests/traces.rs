use hogsos::engine::{run_trace, StepKind};
use hogsos::lang::{language, LangId};

fn chain(lang: LangId, src: &str, fuel: usize) -> Vec<(String, &'static str)> {
    let l = language(lang);
    let t = l.parse(src).unwrap();
    run_trace(&l.operational(), &t, fuel)
        .entries
        .iter()
        .map(|e| (l.print(&e.term), e.kind.symbol()))
        .collect()
}

#[test]
fn symbolic_s_chain() {
    let got = chain(LangId::Xtcl, "S t s e", 10);
    let l = language(LangId::Xtcl);
    let expected = ["S t s e", "S'(t) s e", "S''(t, s) e", "(t e)(s e)"];
    assert_eq!(got.len(), 4);
    for ((g, _), e) in got.iter().zip(expected) {
        assert_eq!(l.parse(g).unwrap(), l.parse(e).unwrap(), "{g} vs {e}");
    }
    assert_eq!(got[3].1, "⊥");
}

#[test]
fn s_i_i_is_ill_typed_in_xtcl_but_runs_in_xcl() {
    assert!(language(LangId::Xtcl).parse("S I I e").is_err());
    let got: Vec<String> = chain(LangId::Xcl, "S I I K", 10).into_iter().map(|(t, _)| t).collect();
    assert_eq!(&got[..4], ["S I I K", "S'(I) I K", "S''(I, I) K", "I K (I K)"]);
}

#[test]
fn small_traces() {
    assert_eq!(chain(LangId::Xtcl, "I e", 10), [("I e".to_string(), "→"), ("e".to_string(), "✓")]);
    let got: Vec<String> = chain(LangId::Xtcl, "(K e)(I e)", 10).into_iter().map(|(t, _)| t).collect();
    assert_eq!(got, ["K e (I e)", "K'(e) (I e)", "e"]);
    assert_eq!(chain(LangId::Xtcl, "e", 10), [("e".to_string(), "✓")]);
}

#[test]
fn probabilistic_branches() {
    let l = language(LangId::Xptcl);
    let tr = run_trace(&l.operational(), &l.parse("e (+) I e").unwrap(), 10);
    let StepKind::Reduct(succ) = &tr.entries[0].kind else { panic!() };
    let weights: Vec<String> = succ.iter().map(|(_, w)| w.as_ref().unwrap().to_string()).collect();
    assert_eq!(weights, ["1/2", "1/2"]);
}

#[test]
fn omega_runs_out_of_fuel() {
    let l = language(LangId::Xcl);
    let tr = run_trace(&l.operational(), &l.parse("S I I (S I I)").unwrap(), 30);
    assert!(tr.diverged);
    assert_eq!(tr.entries.len(), 31);
}
