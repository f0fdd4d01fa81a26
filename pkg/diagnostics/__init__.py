# SplitLab diagnostics package
