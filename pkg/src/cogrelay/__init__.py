"""Power allocation for MIMO two-way cognitive relay networks."""
