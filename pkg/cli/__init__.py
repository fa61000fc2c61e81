# Command-line interface package
