use hogsos::gitrees::{approximant, enumerate_stage, StageLanguage};
use hogsos::harness::{run_suite, Suite};
use hogsos::lang::LangId;
use hogsos::Error;

#[test]
fn stage_sizes() {
    assert_eq!(enumerate_stage(StageLanguage::Xcl, 0).unwrap().len(), 2);
    assert_eq!(enumerate_stage(StageLanguage::Xnccl, 0).unwrap().len(), 3);
    assert_eq!(enumerate_stage(StageLanguage::Xcl, 1).unwrap().len(), 6);
    assert_eq!(enumerate_stage(StageLanguage::Xcl, 2).unwrap().len(), 5446);
}

#[test]
fn approximants_agree_with_stages() {
    for n in 1..=3 {
        let tower = approximant(StageLanguage::Xcl, n, n - 1).unwrap();
        for k in 0..n {
            let mut a = tower.stages[k].clone();
            let mut z = enumerate_stage(StageLanguage::Xcl, k).unwrap();
            a.sort();
            z.sort();
            assert_eq!(a, z, "n = {n}, k = {k}");
        }
    }
}

#[test]
fn tower_suite_bounds() {
    let p = Suite::Tower.default_params_for(LangId::Xnccl);
    assert!(run_suite(Suite::Tower, LangId::Xnccl, &p).unwrap().passed());
    let too_far = hogsos::harness::Params { depth: 4, ..p };
    assert!(matches!(
        run_suite(Suite::Tower, LangId::Xcl, &too_far),
        Err(Error::StageTooLarge { requested: 4, bound: 3 })
    ));
    assert!(run_suite(Suite::Tower, LangId::Lambda, &p).is_err());
}
