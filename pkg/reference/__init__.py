# SplitLab reference samplers package
