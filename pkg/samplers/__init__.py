# SplitLab samplers package
