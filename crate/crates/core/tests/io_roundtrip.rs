mod common;

use calrank::io::{read_trial_csv, write_trial_csv, CsvSchema};
use calrank::{analyze, AnalysisOptions};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_gives_identical_analysis(seed in any::<u64>()) {
        let data = common::random_dataset(seed);
        let mut buf = Vec::new();
        write_trial_csv(&data, &mut buf).unwrap();
        let back = read_trial_csv(buf.as_slice(), &CsvSchema::default()).unwrap();
        prop_assert_eq!(&back, &data);
        let opts = AnalysisOptions { subgroups: true, ..AnalysisOptions::default() };
        prop_assert_eq!(
            analyze(&back, &opts).to_json().unwrap(),
            analyze(&data, &opts).to_json().unwrap()
        );
    }

    #[test]
    fn report_json_round_trips(seed in any::<u64>()) {
        let data = common::random_dataset(seed);
        let report = analyze(&data, &AnalysisOptions { subgroups: true, ..AnalysisOptions::default() });
        let parsed = calrank::AnalysisReport::from_json(&report.to_json().unwrap()).unwrap();
        prop_assert_eq!(parsed, report);
    }

    #[test]
    fn bonferroni_adjustment(seed in any::<u64>()) {
        let data = common::random_dataset(seed);
        let report = analyze(&data, &AnalysisOptions { subgroups: true, ..AnalysisOptions::default() });
        let m = report.bonferroni_m as f64;
        prop_assert_eq!(report.bonferroni_m, data.strata().len());
        for g in &report.subgroups {
            for cell in &g.section.tests {
                if let (Some(r), Some(adj)) = (&cell.result, cell.p_adjusted) {
                    prop_assert!(adj >= r.p_value);
                    prop_assert_eq!(adj, (m * r.p_value).min(1.0));
                }
            }
        }
    }
}
