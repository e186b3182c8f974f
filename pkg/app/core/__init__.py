# Scenario, configuration and errors
