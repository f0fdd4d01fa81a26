# SplitLab density estimation package
