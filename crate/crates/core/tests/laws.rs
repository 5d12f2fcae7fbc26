use hogsos::engine::{check_flatness, HoGsosLaw};
use hogsos::kernel::enumerate_terms;
use hogsos::lang::{language, LangId};

#[test]
fn shipped_laws_round_trip_and_are_flat() {
    for lang in LangId::ALL {
        let law = &language(lang).law;
        let again = HoGsosLaw::parse(law.sig.clone(), &law.to_string()).unwrap();
        assert_eq!(*law.as_ref(), again, "{lang}");
        assert!(check_flatness(law).flat, "{lang}");
    }
}

#[test]
fn printer_round_trips_small_terms() {
    for lang in LangId::ALL {
        let l = language(lang);
        for sort in l.program_sorts() {
            for t in enumerate_terms(l.sig().as_ref(), &sort, 6) {
                assert_eq!(l.parse(&l.print(&t)).unwrap(), t, "{lang}: {}", l.print(&t));
            }
        }
    }
}
