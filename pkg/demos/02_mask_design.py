#!/usr/bin/env python3
"""Show the two mask-generation regimes and the Hamming-distance objective.

Masks should be as different as possible between classes so that compressed
prototypes stay discriminative.  When K*s <= d the masks can simply be made
disjoint (every pairwise Hamming distance is the maximum 2s).  Once classes
need more slots than dimensions exist, overlap is unavoidable and a seeded
hill-climbing search widens the tightest pairs.
"""
from tinyproto import format_mask_rows, generate_masks, min_pairwise_hamming

# disjoint regime: 5 classes, 5 dimensions, 1 slot each
small = generate_masks(5, 5, 1, seed=0)
print("disjoint regime (K=5, d=5, s=1):")
print(format_mask_rows(small), end="")
print("min pairwise Hamming distance:", min_pairwise_hamming(small), "\n")

# still disjoint with spare dimensions: 10 classes of 50 slots in 500 dims
blocks = generate_masks(10, 500, 50, seed=0)
print("block regime (K=10, d=500, s=50):")
print("min pairwise Hamming distance:", min_pairwise_hamming(blocks), "= 2s\n")

# overlap regime: 200 classes want 50 slots each but only 500 dims exist
crowded = generate_masks(200, 500, 50, seed=3)
print("overlap regime (K=200, d=500, s=50):")
print("  seeded random start, min distance:", crowded.presearch_min_hamming)
print("  after hill climbing, min distance:", min_pairwise_hamming(crowded))
assert min_pairwise_hamming(crowded) >= crowded.presearch_min_hamming
print("the search never makes the tightest pair worse")
