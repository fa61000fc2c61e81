# Configuration module for the distributed average tracking simulator
