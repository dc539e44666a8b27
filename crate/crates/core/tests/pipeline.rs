use emhnp_core::knapsack::{decide_q4, KnapsackInstance, MultiAssetScenario, ScenarioSidecar};
use emhnp_core::knapsack::{decide_knapsack, knapsack_to_scenario, Item};
use emhnp_core::series::{load_panel_csv, write_panel_csv};

#[test]
fn scenario_survives_csv_and_sidecar() {
    let inst = KnapsackInstance::new(
        vec![
            Item { size: 5, value: 3 },
            Item { size: 4, value: 4 },
            Item { size: 6, value: 5 },
            Item { size: 3, value: 2 },
        ],
        9,
        7,
    )
    .unwrap();
    let sc = knapsack_to_scenario(&inst).unwrap();
    let mut csv = Vec::new();
    write_panel_csv(&sc.to_panel().unwrap(), &mut csv).unwrap();
    let sidecar: ScenarioSidecar = serde_json::from_str(&serde_json::to_string(&sc.sidecar()).unwrap()).unwrap();
    let back = MultiAssetScenario::from_panel(&load_panel_csv(csv.as_slice()).unwrap(), &sidecar).unwrap();
    assert_eq!(back, sc);
    let q4 = decide_q4(&back).unwrap();
    assert_eq!(q4.decision, decide_knapsack(&inst).unwrap());
    assert_eq!(q4.reduction.instance.items().len(), 4);
}
