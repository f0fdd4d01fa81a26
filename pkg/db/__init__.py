# SplitLab persistence package
