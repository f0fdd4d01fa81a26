# SplitLab targets package
