#!/usr/bin/env python3
"""Compare per-round communication bills across algorithm families.

The closed-form cost model counts transmitted parameters per round.  The
same numbers fall out of the simulator's byte-level accounting; here we just
query the formulas the way a planning exercise would.
"""
from tinyproto import CostQuery, cost, cost_millions, figure1_table

# a 20-client, 100-class deployment with 500-dim prototypes, 50 kept
setting = dict(n_clients=20, n_classes=100, classes_per_client=46)
rows = [
    CostQuery(algorithm="LG-FedAvg", n_clients=20, classifier_params=50_000),
    CostQuery(algorithm="FML", n_clients=20, aux_extractor_params=850_000, aux_classifier_params=53_000),
    CostQuery(algorithm="FedKD", n_clients=20, aux_extractor_params=850_000, aux_classifier_params=53_000, reduction_factor=0.9),
    CostQuery(algorithm="FedDistill", **setting),
    CostQuery(algorithm="FedProto", **setting, proto_dim=500),
    CostQuery(algorithm="FedTGP", **setting, proto_dim=500),
    CostQuery(algorithm="TinyProto", **setting, comp_dim=50),
]
print(f"{'algorithm':<12} {'params/round':>14} {'millions':>9}")
for query in rows:
    print(f"{query.algorithm:<12} {cost(query):>14,} {cost_millions(query):>9.2f}")

tiny = cost(CostQuery(algorithm="TinyProto", **setting, comp_dim=50))
dense = cost(CostQuery(algorithm="FedProto", **setting, proto_dim=500))
print(f"\ncompressed/dense prototype ratio: {tiny / dense:.2f} (= s/d = 50/500)")

# how the prototype route scales against shipping a full model:
# trunk of ~0.36M params plus a d x K classifier head
print("\nfull-model vs prototype exchange, per client per direction:")
print(f"{'K':>6} {'d':>6} {'full model':>12} {'prototypes':>12} {'ratio':>7}")
for row in figure1_table(360_000, k_range=[10, 100, 1000], d_range=[100, 500, 1024]):
    flag = "  <- near parity" if row["near_parity"] else ""
    print(
        f"{row['n_classes']:>6} {row['proto_dim']:>6} {row['fedavg_params']:>12,}"
        f" {row['pbfl_params']:>12,} {row['ratio']:>7.3f}{flag}"
    )
