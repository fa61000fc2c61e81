# Tests module for Private Document Q&A System 