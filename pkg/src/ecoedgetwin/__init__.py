"""Digital-twin-assisted task offloading simulator with a from-scratch A2C trainer."""
