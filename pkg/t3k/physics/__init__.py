"""Physics layer: every function here is pure and works on value inputs."""
