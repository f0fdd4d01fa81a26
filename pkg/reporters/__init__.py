# SplitLab reporters package
