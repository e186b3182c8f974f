# LLM operator
